#include "esic/error.hpp"
#include "esic/value_json.hpp"
#include "esic/wire.hpp"
#include "support/oracle_encoder.hpp"
#include "support/random_types.hpp"

#include <gtest/gtest.h>

using namespace esic;

namespace {

EsiType u(std::uint32_t w) { return EsiType::uint(w); }
using V = MessageValue;

ErrorCode error_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

const EsiType kEnum5 = EsiType::enumeration({"A", "B", "C", "D", "E"});
const EsiType kAB = EsiType::structure({{"a", u(4)}, {"b", u(4)}});
const EsiType kUnion = EsiType::union_of({{"a", u(3)}, {"b", u(9)}});

} // namespace

TEST(Encode, Examples) {
  EXPECT_EQ(encode(V::structure({V::uint(3), V::uint(10)}), kAB).to_hex(), "a3");
  EXPECT_EQ(encode(V::enumerator(2), kEnum5).to_binary(), "010");
  // tag 0 in bit 0, payload 101 in bits 1..3, six zero pad bits.
  EXPECT_EQ(encode(V::union_of(0, V::uint(0b101)), kUnion).to_binary(), "0000001010");
}

TEST(Encode, SignedTwosComplement) {
  EXPECT_EQ(encode(V::sint(-1), EsiType::sint(4)).to_binary(), "1111");
  EXPECT_EQ(encode(V::sint(-8), EsiType::sint(4)).to_binary(), "1000");
  EXPECT_EQ(encode(V::sint(7), EsiType::sint(4)).to_binary(), "0111");
  EXPECT_EQ(error_of([] { encode(V::sint(8), EsiType::sint(4)); }), ErrorCode::Range);
  EXPECT_EQ(error_of([] { encode(V::sint(-9), EsiType::sint(4)); }), ErrorCode::Range);
  EXPECT_EQ(encode(V::sint(-1), EsiType::sint(1)).to_binary(), "1");
  auto wide = EsiType::sint(130);
  auto minus_one = encode(V::sint(-1), wide);
  EXPECT_FALSE(minus_one.any_set_from(130));
  for (std::size_t i = 0; i < 130; ++i)
    ASSERT_TRUE(minus_one.get(i));
  EXPECT_EQ(decode(minus_one, wide), V::sint(-1));
  // -2^129 is the most negative sint130.
  auto most_negative = V::sint_words(true, {0, 0, 2});
  EXPECT_EQ(decode(encode(most_negative, wide), wide), most_negative);
}

TEST(Encode, ShapeAndRangeErrors) {
  EXPECT_EQ(error_of([] { encode(V::uint(16), u(4)); }), ErrorCode::Range);
  EXPECT_EQ(error_of([] { encode(V::uint(1), kAB); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(error_of([] { encode(V::structure({V::uint(1)}), kAB); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(error_of([] { encode(V::enumerator(5), kEnum5); }), ErrorCode::Range);
  EXPECT_EQ(error_of([] { encode(V::union_of(2, V::uint(0)), kUnion); }), ErrorCode::Range);
  EXPECT_EQ(error_of([] { encode(V::list({}), EsiType::list(u(1))); }), ErrorCode::VariableSize);
}

TEST(Decode, Examples) {
  EXPECT_EQ(decode(BitString::from_uint(0xA3, 8), kAB), V::structure({V::uint(3), V::uint(10)}));
  EXPECT_EQ(decode(BitString::from_binary("011"), kEnum5), V::enumerator(3));
  EXPECT_EQ(error_of([] { decode(BitString::from_binary("101"), kEnum5); }), ErrorCode::BadTag);
  EXPECT_EQ(error_of([] { decode(BitString::from_binary("1011"), kEnum5); }), ErrorCode::Length);
  auto three = EsiType::union_of({{"a", u(1)}, {"b", u(1)}, {"c", u(1)}});
  EXPECT_EQ(error_of([&] { decode(BitString::from_binary("011"), three); }), ErrorCode::BadTag);
}

TEST(Decode, UnionPaddingIgnored) {
  auto bits = BitString::from_binary("1111111010");
  EXPECT_EQ(decode(bits, kUnion), V::union_of(0, V::uint(0b101)));
}

TEST(WireProperties, RoundTripAgainstOracleEncoder) {
  std::mt19937_64 rng(42);
  testsupport::TypeGenOptions opt;
  for (int i = 0; i < 3000; ++i) {
    EsiType t = testsupport::random_fixed_type(rng, opt);
    MessageValue v = random_value(t, rng);
    BitString bits = encode(v, t);
    ASSERT_EQ(bits.size(), bit_width(t));
    ASSERT_EQ(bits.size(), testsupport::oracle_width(t));
    std::vector<bool> expect;
    testsupport::oracle_encode(v, t, expect);
    ASSERT_EQ(bits, testsupport::to_bitstring(expect)) << print_type(t);
    ASSERT_EQ(decode(bits, t), v) << print_type(t);
  }
}

TEST(WireProperties, EncodeOfDecodeIsIdentityOnValidBits) {
  // Types without unions: every bit pattern with in-range tags is canonical.
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    EsiType t = EsiType::structure({{"x", u(1 + rng() % 70)},
                                    {"y", EsiType::sint(1 + rng() % 70)},
                                    {"e", EsiType::enumeration({"P", "Q", "R", "S"})}});
    BitString bits;
    for (std::size_t k = 0; k < bit_width(t); ++k)
      bits.push_back(rng() & 1);
    ASSERT_EQ(encode(decode(bits, t), t), bits);
  }
}

TEST(Gearbox, SplitExamples) {
  auto ten = BitString::from_binary("1111111111");
  auto beats = gearbox_split(ten, 4);
  ASSERT_EQ(beats.size(), 3u);
  EXPECT_EQ(beats[2].bits.to_binary(), "0011");
  EXPECT_TRUE(beats[2].last);
  EXPECT_FALSE(beats[0].last);
  EXPECT_FALSE(beats[1].last);
  auto one = gearbox_split(BitString::from_uint(0x5a, 8), 8);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(one[0].last);
  EXPECT_EQ(gearbox_split(BitString(72), 16).size(), 5u);
}

TEST(Gearbox, JoinErrors) {
  auto beats = gearbox_split(BitString::from_binary("1010101010"), 4);
  auto padded = beats;
  padded[2].bits.set(3, true);
  EXPECT_EQ(error_of([&] { gearbox_join(padded, 10); }), ErrorCode::NonzeroPad);
  EXPECT_EQ(error_of([] { gearbox_join({}, 10); }), ErrorCode::BeatCount);
  auto no_last = beats;
  no_last[2].last = false;
  EXPECT_EQ(error_of([&] { gearbox_join(no_last, 10); }), ErrorCode::MissingLast);
  EXPECT_EQ(error_of([&] { gearbox_join(beats, 14); }), ErrorCode::BeatCount);
  auto early = beats;
  early[0].last = true;
  EXPECT_EQ(error_of([&] { gearbox_join(early, 10); }), ErrorCode::BeatCount);
  EXPECT_EQ(gearbox_join(beats, 10).to_binary(), "1010101010");
}

TEST(Gearbox, JoinSplitProperty) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    std::size_t n = 1 + rng() % 300;
    BitString b;
    for (std::size_t k = 0; k < n; ++k)
      b.push_back(rng() & 1);
    std::size_t w = 1 + rng() % (2 * n);
    auto beats = gearbox_split(b, w);
    ASSERT_EQ(beats.size(), (n + w - 1) / w);
    ASSERT_EQ(gearbox_join(beats, n), b);
  }
}

TEST(ListFraming, Examples) {
  auto elem = u(8);
  auto five = V::list({V::uint(1), V::uint(2), V::uint(3), V::uint(4), V::uint(5)});
  auto framed = frame_list(five, elem);
  EXPECT_EQ(framed.size(), 72u);
  EXPECT_EQ(framed.to_hex(), "050000000102030405");
  auto empty = frame_list(V::list({}), elem);
  EXPECT_EQ(empty, BitString(32));
  EXPECT_EQ(unframe_list(framed, elem), five);
  EXPECT_EQ(error_of([&] { unframe_list(framed.slice(0, 64), elem); }), ErrorCode::Truncated);
  auto longer = framed;
  longer.push_back(false);
  EXPECT_EQ(error_of([&] { unframe_list(longer, elem); }), ErrorCode::Length);
}

TEST(ListFraming, RoundTripProperty) {
  std::mt19937_64 rng(11);
  testsupport::TypeGenOptions opt;
  opt.max_depth = 3;
  for (int i = 0; i < 500; ++i) {
    EsiType elem = testsupport::random_fixed_type(rng, opt);
    auto v = random_value(EsiType::list(elem), rng, {.max_list_length = 20});
    auto bits = frame_list(v, elem);
    ASSERT_EQ(bits.size(), 32 + v.children().size() * bit_width(elem));
    ASSERT_EQ(unframe_list(bits, elem), v);
  }
}

TEST(Repack, Examples) {
  auto elem = u(8);
  auto five = V::list({V::uint(1), V::uint(2), V::uint(3), V::uint(4), V::uint(5)});
  auto in = gearbox_split(frame_list(five, elem), 16);
  ASSERT_EQ(in.size(), 5u);
  auto out = repack(in, elem, 16, 24);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out, gearbox_split(frame_list(five, elem), 24));
  EXPECT_EQ(repack(in, elem, 16, 16), in);
}

TEST(Repack, StreamsBeforeTheMessageEnds) {
  auto elem = u(8);
  std::vector<MessageValue> items;
  for (int i = 0; i < 10; ++i)
    items.push_back(V::uint(i));
  auto in = gearbox_split(frame_list(V::list(items), elem), 8);
  Repacker r(8, 8, 16);
  std::size_t produced = 0;
  for (std::size_t i = 0; i + 1 < in.size(); ++i)
    produced += r.push(in[i]).size();
  EXPECT_EQ(produced, 6u); // 13 input beats; the first 12 fill six 16-bit beats
  auto tail = r.push(in.back());
  ASSERT_EQ(tail.size(), 1u);
  EXPECT_TRUE(tail[0].last);
  EXPECT_TRUE(r.idle());
}

TEST(Repack, Errors) {
  auto elem = u(8);
  auto in = gearbox_split(frame_list(V::list({V::uint(1), V::uint(2), V::uint(3)}), elem), 16);
  std::vector<Beat> truncated(in.begin(), in.end() - 1);
  EXPECT_EQ(error_of([&] { repack(truncated, elem, 16, 8); }), ErrorCode::Truncated);
  auto early = truncated;
  early.back().last = true;
  EXPECT_EQ(error_of([&] { repack(early, elem, 16, 8); }), ErrorCode::Truncated);
  auto no_last = in;
  no_last.back().last = false;
  EXPECT_EQ(error_of([&] { repack(no_last, elem, 16, 8); }), ErrorCode::MissingLast);
  auto bad_pad = in;
  bad_pad.back().bits.set(15, true);
  EXPECT_EQ(error_of([&] { repack(bad_pad, elem, 16, 8); }), ErrorCode::NonzeroPad);
  EXPECT_EQ(error_of([&] { repack({}, elem, 16, 8); }), ErrorCode::BeatCount);
  auto extra = in;
  extra.push_back(in.back());
  EXPECT_EQ(error_of([&] { repack(extra, elem, 16, 8); }), ErrorCode::BeatCount);
  EXPECT_EQ(error_of([&] { repack(in, elem, 8, 8); }), ErrorCode::Length);
}

TEST(Repack, MatchesJoinThenSplitOracle) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1500; ++i) {
    EsiType elem = u(1 + rng() % 32);
    std::uint64_t w = bit_width(elem);
    std::size_t cin = 1 + rng() % 8, cout = 1 + rng() % 8;
    auto v = random_value(EsiType::list(elem), rng, {.max_list_length = 40});
    auto framed = frame_list(v, elem);
    auto in = gearbox_split(framed, cin * w);
    // Oracle: non-streaming join then re-split.
    auto expect = gearbox_split(gearbox_join(in, framed.size()), cout * w);
    ASSERT_EQ(repack(in, elem, cin * w, cout * w), expect);
    std::size_t n = v.children().size();
    ASSERT_EQ(expect.size(), (32 + n * w + cout * w - 1) / (cout * w));
  }
}

TEST(WireBytes, ByteSerialization) {
  auto t = EsiType::structure({{"a", u(4)}, {"b", u(4)}, {"c", u(3)}});
  auto bytes = to_wire_bytes(V::structure({V::uint(3), V::uint(10), V::uint(5)}), t);
  ASSERT_EQ(bytes, (std::vector<std::uint8_t>{0xA3, 0x05}));
  EXPECT_EQ(bits_from_wire_bytes(bytes, t).size(), 11u);
  std::vector<std::uint8_t> bad_pad{0xA3, 0x85};
  EXPECT_EQ(error_of([&] { bits_from_wire_bytes(bad_pad, t); }), ErrorCode::NonzeroPad);
  std::vector<std::uint8_t> short_msg{0xA3};
  EXPECT_EQ(error_of([&] { bits_from_wire_bytes(short_msg, t); }), ErrorCode::Length);

  auto lt = EsiType::list(u(4));
  auto lbytes = to_wire_bytes(V::list({V::uint(1), V::uint(2), V::uint(3)}), lt);
  EXPECT_EQ(lbytes, (std::vector<std::uint8_t>{3, 0, 0, 0, 0x21, 0x03}));
  EXPECT_EQ(decode_message(bits_from_wire_bytes(lbytes, lt), lt),
            V::list({V::uint(1), V::uint(2), V::uint(3)}));
}

TEST(ValueJson, RoundTrip) {
  std::mt19937_64 rng(3);
  testsupport::TypeGenOptions opt;
  opt.max_int_width = 200;
  for (int i = 0; i < 1000; ++i) {
    EsiType t = testsupport::random_channel_type(rng, opt);
    auto v = random_value(t, rng);
    auto j = value_to_json(v, t);
    ASSERT_EQ(value_from_json(Json::parse(j.dump()), t), v) << print_type(t) << " " << j.dump();
  }
  EXPECT_EQ(value_to_json(V::structure({V::uint(3), V::uint(10)}), kAB).dump(), R"({"a":3,"b":10})");
  EXPECT_EQ(value_to_json(V::union_of(1, V::uint(7)), kUnion).dump(), R"({"b":7})");
  EXPECT_EQ(error_of([] { value_from_json(Json(-1), u(4)); }), ErrorCode::Range);
  EXPECT_EQ(error_of([] { value_from_json(Json("Z"), kEnum5); }), ErrorCode::Range);
}
