#include "esic/error.hpp"
#include "esic/types.hpp"
#include "support/random_types.hpp"

#include <gtest/gtest.h>

using namespace esic;

namespace {

EsiType u(std::uint32_t w) { return EsiType::uint(w); }

ErrorCode error_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

} // namespace

TEST(BitWidth, Examples) {
  EXPECT_EQ(bit_width(u(7)), 7u);
  EXPECT_EQ(bit_width(EsiType::structure({{"a", u(4)}, {"b", u(4)}})), 8u);
  EXPECT_EQ(bit_width(EsiType::enumeration({"A", "B", "C", "D", "E"})), 3u);
  EXPECT_EQ(bit_width(EsiType::union_of({{"a", u(3)}, {"b", u(9)}})), 10u);
}

TEST(BitWidth, TagWidths) {
  EXPECT_EQ(tag_width(1), 1u);
  EXPECT_EQ(tag_width(2), 1u);
  EXPECT_EQ(tag_width(3), 2u);
  EXPECT_EQ(tag_width(4), 2u);
  EXPECT_EQ(tag_width(5), 3u);
  EXPECT_EQ(tag_width(256), 8u);
  EXPECT_EQ(tag_width(257), 9u);
  EXPECT_EQ(bit_width(EsiType::enumeration({"only"})), 1u);
  EXPECT_EQ(bit_width(EsiType::array(EsiType::sint(5), 3)), 15u);
}

TEST(BitWidth, ListHasNoWidth) {
  EXPECT_EQ(error_of([] { bit_width(EsiType::list(u(8))); }), ErrorCode::VariableSize);
}

TEST(TypeEqual, Examples) {
  EXPECT_TRUE(type_equal(u(8), u(8)));
  EXPECT_FALSE(type_equal(EsiType::structure({{"a", u(8)}}),
                          EsiType::structure({{"b", u(8)}})));
  EXPECT_TRUE(type_equal(EsiType::array(u(4), 3), EsiType::array(u(4), 3)));
  EXPECT_FALSE(type_equal(u(8), EsiType::sint(8)));
  EXPECT_FALSE(type_equal(EsiType::structure({{"a", u(1)}, {"b", u(1)}}),
                          EsiType::structure({{"b", u(1)}, {"a", u(1)}})));
}

TEST(Factories, RejectInvalid) {
  EXPECT_EQ(error_of([] { u(0); }), ErrorCode::InvalidType);
  EXPECT_EQ(error_of([] { u(kMaxScalarWidth + 1); }), ErrorCode::InvalidType);
  EXPECT_NO_THROW(u(kMaxScalarWidth));
  EXPECT_EQ(error_of([] { EsiType::array(u(1), 0); }), ErrorCode::InvalidType);
  EXPECT_EQ(error_of([] { EsiType::structure({}); }), ErrorCode::InvalidType);
  EXPECT_EQ(error_of([] { EsiType::enumeration({"A", "A"}); }), ErrorCode::InvalidType);
  EXPECT_EQ(error_of([] { EsiType::union_of({{"x", u(1)}, {"x", u(2)}}); }),
            ErrorCode::InvalidType);
  EXPECT_EQ(error_of([] { EsiType::structure({{"a", EsiType::list(u(1))}}); }),
            ErrorCode::NestedList);
  EXPECT_EQ(error_of([] { EsiType::list(EsiType::list(u(1))); }), ErrorCode::NestedList);
}

TEST(ParseType, Examples) {
  EXPECT_EQ(parse_type("uint8"), u(8));
  EXPECT_EQ(parse_type("struct{a:uint4,b:uint4}"),
            EsiType::structure({{"a", u(4)}, {"b", u(4)}}));
  EXPECT_EQ(error_of([] { parse_type("list<list<uint8>>"); }), ErrorCode::NestedList);
  EXPECT_EQ(error_of([] { parse_type("struct{a:list<uint8>}"); }), ErrorCode::NestedList);
}

TEST(ParseType, AcceptsWhitespace) {
  auto t = parse_type("  struct { a : array< sint3 , 2 > ,\n b: enum{ X , Y } } ");
  EXPECT_EQ(print_type(t), "struct{a:array<sint3,2>,b:enum{X,Y}}");
  EXPECT_EQ(print_type(parse_type(" list < union{p:uint1} > ")), "list<union{p:uint1}>");
}

TEST(ParseType, SyntaxErrorsCarryPosition) {
  try {
    parse_type("struct{a:uint4,b:bogus}");
    FAIL();
  } catch (const SyntaxError &e) {
    EXPECT_EQ(e.position(), 17u);
  }
  for (const char *bad : {"", "uint", "uint0", "uint4097", "array<uint1,0>", "enum{}",
                          "enum{A,A}", "struct{a:uint1", "uint8 x", "struct{1a:uint1}",
                          "array<uint1>"}) {
    EXPECT_EQ(error_of([&] { parse_type(bad); }), ErrorCode::Syntax) << bad;
  }
}

TEST(TypeId, Examples) {
  EXPECT_EQ(type_id(u(8)), type_id(u(8)));
  // FNV-1a 64 of the canonical text, computed independently.
  EXPECT_EQ(type_id(u(8)), 0x34fa7f24f14f37fbULL);
  EXPECT_EQ(type_id(u(9)), 0x34fa7e24f14f3648ULL);
  EXPECT_NE(type_id(u(8)), type_id(u(9)));
  EXPECT_EQ(type_id(parse_type("struct{ a:uint4, b:uint4 }")), 0xd6ee9cc28ec1ced5ULL);
}

TEST(TypeProperties, PrintParseRoundTrip) {
  std::mt19937_64 rng(1234);
  testsupport::TypeGenOptions opt;
  for (int i = 0; i < 2000; ++i) {
    EsiType t = testsupport::random_channel_type(rng, opt);
    std::string text = print_type(t);
    EsiType back = parse_type(text);
    ASSERT_TRUE(type_equal(back, t)) << text;
    ASSERT_EQ(print_type(back), text);
    ASSERT_EQ(type_id(back), type_id(t));
    ASSERT_EQ(text.find(' '), std::string::npos);
  }
}

TEST(TypeProperties, EqualityIsEquivalence) {
  std::mt19937_64 rng(99);
  testsupport::TypeGenOptions opt;
  opt.max_depth = 2;
  opt.max_int_width = 3;
  opt.max_members = 2;
  opt.max_array_length = 2;
  std::vector<EsiType> pool;
  for (int i = 0; i < 60; ++i)
    pool.push_back(testsupport::random_fixed_type(rng, opt));
  for (const auto &a : pool) {
    EXPECT_TRUE(type_equal(a, a));
    for (const auto &b : pool) {
      EXPECT_EQ(type_equal(a, b), type_equal(b, a));
      EXPECT_EQ(type_equal(a, b), print_type(a) == print_type(b));
      if (type_equal(a, b))
        EXPECT_EQ(type_id(a), type_id(b));
      for (const auto &c : pool)
        if (type_equal(a, b) && type_equal(b, c))
          EXPECT_TRUE(type_equal(a, c));
    }
  }
}
