//===- wire.cpp - Encoding, gearboxing and list repacking -----------------===//

#include "esic/wire.hpp"
#include "esic/error.hpp"

#include <algorithm>
#include <bit>

namespace esic {

namespace {

std::size_t bit_length(const std::vector<std::uint64_t> &words) {
  for (std::size_t i = words.size(); i-- > 0;)
    if (words[i])
      return i * 64 + (64 - static_cast<std::size_t>(std::countl_zero(words[i])));
  return 0;
}

bool is_power_of_two(const std::vector<std::uint64_t> &words) {
  std::size_t ones = 0;
  for (auto w : words)
    ones += static_cast<std::size_t>(std::popcount(w));
  return ones == 1;
}

/// Two's complement negation in place over `width` bits.
void negate(std::vector<std::uint64_t> &words, std::size_t width) {
  words.resize((width + 63) / 64, 0);
  std::uint64_t carry = 1;
  for (auto &w : words) {
    w = ~w;
    std::uint64_t before = w;
    w += carry;
    carry = (carry && w < before) ? 1 : 0;
  }
  if (width % 64)
    words.back() &= (std::uint64_t{1} << (width % 64)) - 1;
}

void append_words(BitString &out, const std::vector<std::uint64_t> &words,
                  std::size_t width) {
  for (std::size_t i = 0, done = 0; done < width; ++i) {
    std::size_t chunk = std::min<std::size_t>(64, width - done);
    std::uint64_t word = i < words.size() ? words[i] : 0;
    if (chunk < 64)
      word &= (std::uint64_t{1} << chunk) - 1;
    out.append_uint(word, chunk);
    done += chunk;
  }
}

std::vector<std::uint64_t> read_words(const BitString &bits, std::size_t pos,
                                      std::size_t width) {
  std::vector<std::uint64_t> words;
  for (std::size_t done = 0; done < width; done += 64)
    words.push_back(bits.read_uint(pos + done, std::min<std::size_t>(64, width - done)));
  return words;
}

MessageValue::Kind value_kind(TypeKind kind) {
  switch (kind) {
  case TypeKind::UInt: return MessageValue::Kind::UInt;
  case TypeKind::SInt: return MessageValue::Kind::SInt;
  case TypeKind::Enum: return MessageValue::Kind::Enum;
  case TypeKind::Array: return MessageValue::Kind::Array;
  case TypeKind::Struct: return MessageValue::Kind::Struct;
  case TypeKind::Union: return MessageValue::Kind::Union;
  case TypeKind::List: return MessageValue::Kind::List;
  }
  return MessageValue::Kind::UInt;
}

} // namespace

//===----------------------------------------------------------------------===//
// MessageValue
//===----------------------------------------------------------------------===//

void MessageValue::normalize() {
  while (!magnitude_.empty() && magnitude_.back() == 0)
    magnitude_.pop_back();
  if (magnitude_.empty())
    negative_ = false;
}

MessageValue MessageValue::uint(std::uint64_t value) {
  return uint_words({value});
}

MessageValue MessageValue::uint_words(std::vector<std::uint64_t> magnitude) {
  MessageValue v;
  v.kind_ = Kind::UInt;
  v.magnitude_ = std::move(magnitude);
  v.normalize();
  return v;
}

MessageValue MessageValue::sint(std::int64_t value) {
  std::uint64_t mag = value < 0 ? ~static_cast<std::uint64_t>(value) + 1
                                : static_cast<std::uint64_t>(value);
  return sint_words(value < 0, {mag});
}

MessageValue MessageValue::sint_words(bool negative,
                                      std::vector<std::uint64_t> magnitude) {
  MessageValue v;
  v.kind_ = Kind::SInt;
  v.negative_ = negative;
  v.magnitude_ = std::move(magnitude);
  v.normalize();
  return v;
}

MessageValue MessageValue::enumerator(std::uint32_t index) {
  MessageValue v;
  v.kind_ = Kind::Enum;
  v.index_ = index;
  return v;
}

MessageValue MessageValue::array(std::vector<MessageValue> elements) {
  MessageValue v;
  v.kind_ = Kind::Array;
  v.children_ = std::move(elements);
  return v;
}

MessageValue MessageValue::structure(std::vector<MessageValue> fields) {
  MessageValue v;
  v.kind_ = Kind::Struct;
  v.children_ = std::move(fields);
  return v;
}

MessageValue MessageValue::union_of(std::uint32_t variant,
                                    MessageValue payload) {
  MessageValue v;
  v.kind_ = Kind::Union;
  v.index_ = variant;
  v.children_.push_back(std::move(payload));
  return v;
}

MessageValue MessageValue::list(std::vector<MessageValue> elements) {
  MessageValue v;
  v.kind_ = Kind::List;
  v.children_ = std::move(elements);
  return v;
}

std::uint64_t MessageValue::as_u64() const {
  if ((kind_ != Kind::UInt && kind_ != Kind::SInt) || negative_ ||
      magnitude_.size() > 1)
    throw Error(ErrorCode::Range, "value does not fit in uint64");
  return magnitude_.empty() ? 0 : magnitude_[0];
}

std::int64_t MessageValue::as_i64() const {
  if ((kind_ != Kind::UInt && kind_ != Kind::SInt) || magnitude_.size() > 1)
    throw Error(ErrorCode::Range, "value does not fit in int64");
  std::uint64_t mag = magnitude_.empty() ? 0 : magnitude_[0];
  if (negative_) {
    if (mag > (std::uint64_t{1} << 63))
      throw Error(ErrorCode::Range, "value does not fit in int64");
    return static_cast<std::int64_t>(~mag + 1);
  }
  if (mag >> 63)
    throw Error(ErrorCode::Range, "value does not fit in int64");
  return static_cast<std::int64_t>(mag);
}

//===----------------------------------------------------------------------===//
// validate / encode / decode
//===----------------------------------------------------------------------===//

void validate(const MessageValue &value, const EsiType &type) {
  if (value.kind() != value_kind(type.kind()))
    throw Error(ErrorCode::ShapeMismatch,
                "value shape does not match type " + print_type(type));
  switch (type.kind()) {
  case TypeKind::UInt:
    if (bit_length(value.magnitude()) > type.int_width())
      throw Error(ErrorCode::Range, "value exceeds " + print_type(type));
    return;
  case TypeKind::SInt: {
    std::size_t len = bit_length(value.magnitude());
    std::size_t w = type.int_width();
    bool ok = len <= w - 1 ||
              (value.negative() && len == w && is_power_of_two(value.magnitude()));
    if (!ok)
      throw Error(ErrorCode::Range, "value outside range of " + print_type(type));
    return;
  }
  case TypeKind::Enum:
    if (value.index() >= type.names().size())
      throw Error(ErrorCode::Range, "enum tag out of range");
    return;
  case TypeKind::Array:
    if (value.children().size() != type.length())
      throw Error(ErrorCode::ShapeMismatch, "array length mismatch");
    for (const auto &child : value.children())
      validate(child, type.element());
    return;
  case TypeKind::Struct:
    if (value.children().size() != type.children().size())
      throw Error(ErrorCode::ShapeMismatch, "struct field count mismatch");
    for (std::size_t i = 0; i < value.children().size(); ++i)
      validate(value.children()[i], type.children()[i]);
    return;
  case TypeKind::Union:
    if (value.index() >= type.children().size())
      throw Error(ErrorCode::Range, "union variant out of range");
    validate(value.children().at(0), type.children()[value.index()]);
    return;
  case TypeKind::List:
    if (value.children().size() > 0xffffffffULL)
      throw Error(ErrorCode::Range, "list longer than 2^32-1 elements");
    for (const auto &child : value.children())
      validate(child, type.element());
    return;
  }
}

namespace {

void encode_into(const MessageValue &value, const EsiType &type,
                 BitString &out) {
  switch (type.kind()) {
  case TypeKind::UInt:
    append_words(out, value.magnitude(), type.int_width());
    return;
  case TypeKind::SInt: {
    auto words = value.magnitude();
    if (value.negative())
      negate(words, type.int_width());
    append_words(out, words, type.int_width());
    return;
  }
  case TypeKind::Enum:
    out.append_uint(value.index(), tag_width(type.names().size()));
    return;
  case TypeKind::Array:
    for (const auto &child : value.children())
      encode_into(child, type.element(), out);
    return;
  case TypeKind::Struct:
    for (std::size_t i = 0; i < value.children().size(); ++i)
      encode_into(value.children()[i], type.children()[i], out);
    return;
  case TypeKind::Union: {
    std::size_t start = out.size();
    out.append_uint(value.index(), tag_width(type.children().size()));
    encode_into(value.children()[0], type.children()[value.index()], out);
    out.resize(start + bit_width(type));
    return;
  }
  case TypeKind::List:
    throw Error(ErrorCode::VariableSize, "lists are framed, not encoded");
  }
}

MessageValue decode_at(const BitString &bits, std::size_t &pos,
                       const EsiType &type) {
  switch (type.kind()) {
  case TypeKind::UInt: {
    auto words = read_words(bits, pos, type.int_width());
    pos += type.int_width();
    return MessageValue::uint_words(std::move(words));
  }
  case TypeKind::SInt: {
    std::size_t w = type.int_width();
    auto words = read_words(bits, pos, w);
    bool negative = bits.get(pos + w - 1);
    if (negative)
      negate(words, w);
    pos += w;
    return MessageValue::sint_words(negative, std::move(words));
  }
  case TypeKind::Enum: {
    std::uint32_t tw = tag_width(type.names().size());
    std::uint64_t tag = bits.read_uint(pos, tw);
    if (tag >= type.names().size())
      throw Error(ErrorCode::BadTag, "enum tag " + std::to_string(tag) +
                                         " >= " + std::to_string(type.names().size()));
    pos += tw;
    return MessageValue::enumerator(static_cast<std::uint32_t>(tag));
  }
  case TypeKind::Array: {
    std::vector<MessageValue> elements;
    elements.reserve(type.length());
    for (std::uint32_t i = 0; i < type.length(); ++i)
      elements.push_back(decode_at(bits, pos, type.element()));
    return MessageValue::array(std::move(elements));
  }
  case TypeKind::Struct: {
    std::vector<MessageValue> fields;
    for (const auto &child : type.children())
      fields.push_back(decode_at(bits, pos, child));
    return MessageValue::structure(std::move(fields));
  }
  case TypeKind::Union: {
    std::size_t start = pos;
    std::uint32_t tw = tag_width(type.children().size());
    std::uint64_t tag = bits.read_uint(pos, tw);
    if (tag >= type.children().size())
      throw Error(ErrorCode::BadTag, "union tag " + std::to_string(tag) +
                                         " >= " + std::to_string(type.children().size()));
    pos += tw;
    MessageValue payload = decode_at(bits, pos, type.children()[tag]);
    pos = start + bit_width(type);
    return MessageValue::union_of(static_cast<std::uint32_t>(tag), std::move(payload));
  }
  case TypeKind::List:
    throw Error(ErrorCode::VariableSize, "lists are framed, not encoded");
  }
  throw Error(ErrorCode::ShapeMismatch, "unknown type kind");
}

} // namespace

BitString encode(const MessageValue &value, const EsiType &type) {
  std::uint64_t width = bit_width(type);
  validate(value, type);
  BitString out;
  encode_into(value, type, out);
  if (out.size() != width)
    throw Error(ErrorCode::Length, "internal: encoded width mismatch");
  return out;
}

MessageValue decode(const BitString &bits, const EsiType &type) {
  std::uint64_t width = bit_width(type);
  if (bits.size() != width)
    throw Error(ErrorCode::Length, "expected " + std::to_string(width) +
                                       " bits, got " + std::to_string(bits.size()));
  std::size_t pos = 0;
  return decode_at(bits, pos, type);
}

//===----------------------------------------------------------------------===//
// Gearboxing and framing
//===----------------------------------------------------------------------===//

std::vector<Beat> gearbox_split(const BitString &bits, std::size_t width) {
  if (width < 1)
    throw Error(ErrorCode::Range, "beat width must be at least 1");
  if (bits.empty())
    throw Error(ErrorCode::Length, "cannot split an empty message");
  std::size_t count = (bits.size() + width - 1) / width;
  std::vector<Beat> beats;
  beats.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t begin = k * width;
    std::size_t take = std::min(width, bits.size() - begin);
    Beat beat{bits.slice(begin, take), k + 1 == count};
    beat.bits.resize(width);
    beats.push_back(std::move(beat));
  }
  return beats;
}

BitString gearbox_join(std::span<const Beat> beats, std::size_t expected_bits) {
  if (beats.empty())
    throw Error(ErrorCode::BeatCount, "no beats");
  std::size_t width = beats[0].bits.size();
  if (width == 0)
    throw Error(ErrorCode::Length, "zero-width beat");
  for (std::size_t i = 0; i < beats.size(); ++i) {
    if (beats[i].bits.size() != width)
      throw Error(ErrorCode::Length, "beat widths differ");
    if (beats[i].last && i + 1 != beats.size())
      throw Error(ErrorCode::BeatCount, "last flag before the final beat");
  }
  if (!beats.back().last)
    throw Error(ErrorCode::MissingLast, "final beat lacks the last flag");
  std::size_t want = (expected_bits + width - 1) / width;
  if (beats.size() != want)
    throw Error(ErrorCode::BeatCount, "expected " + std::to_string(want) +
                                          " beats, got " + std::to_string(beats.size()));
  BitString out;
  for (const auto &beat : beats)
    out.append(beat.bits);
  if (out.any_set_from(expected_bits))
    throw Error(ErrorCode::NonzeroPad, "nonzero padding in final beat");
  out.resize(expected_bits);
  return out;
}

BitString frame_list(const MessageValue &list, const EsiType &element) {
  if (list.kind() != MessageValue::Kind::List)
    throw Error(ErrorCode::ShapeMismatch, "frame_list expects a list value");
  if (list.children().size() > 0xffffffffULL)
    throw Error(ErrorCode::Range, "list longer than 2^32-1 elements");
  BitString out;
  out.append_uint(list.children().size(), kListHeaderBits);
  for (const auto &child : list.children()) {
    validate(child, element);
    encode_into(child, element, out);
  }
  return out;
}

std::optional<std::uint64_t> framed_length(const BitString &prefix,
                                           std::uint64_t element_bits) {
  if (prefix.size() < kListHeaderBits)
    return std::nullopt;
  return kListHeaderBits + prefix.read_uint(0, kListHeaderBits) * element_bits;
}

MessageValue unframe_list(const BitString &bits, const EsiType &element) {
  std::uint64_t w = bit_width(element);
  auto total = framed_length(bits, w);
  if (!total || bits.size() < *total)
    throw Error(ErrorCode::Truncated, "list stream shorter than its header implies");
  if (bits.size() != *total)
    throw Error(ErrorCode::Length, "list stream longer than its header implies");
  std::uint64_t n = bits.read_uint(0, kListHeaderBits);
  std::vector<MessageValue> elements;
  elements.reserve(n);
  std::size_t pos = kListHeaderBits;
  for (std::uint64_t i = 0; i < n; ++i)
    elements.push_back(decode_at(bits, pos, element));
  return MessageValue::list(std::move(elements));
}

BitString encode_message(const MessageValue &value, const EsiType &type) {
  if (type.is_list()) {
    validate(value, type);
    return frame_list(value, type.element());
  }
  return encode(value, type);
}

MessageValue decode_message(const BitString &bits, const EsiType &type) {
  return type.is_list() ? unframe_list(bits, type.element()) : decode(bits, type);
}

std::uint64_t channel_width(const EsiType &type, std::uint32_t chunk) {
  if (type.is_list()) {
    if (chunk < 1)
      throw Error(ErrorCode::Range, "chunk size must be at least 1");
    return std::uint64_t{chunk} * bit_width(type.element());
  }
  return bit_width(type);
}

//===----------------------------------------------------------------------===//
// Repacker
//===----------------------------------------------------------------------===//

Repacker::Repacker(std::uint64_t element_bits, std::size_t width_in,
                   std::size_t width_out)
    : element_bits_(element_bits), width_in_(width_in), width_out_(width_out) {
  if (width_in < 1 || width_out < 1 || element_bits < 1)
    throw Error(ErrorCode::Range, "repacker widths must be positive");
}

void Repacker::reset() {
  pending_ = BitString();
  header_ = BitString();
  received_ = 0;
  emitted_ = 0;
  total_.reset();
}

std::vector<Beat> Repacker::push(const Beat &beat) {
  if (beat.bits.size() != width_in_)
    throw Error(ErrorCode::Length, "input beat width " +
                                       std::to_string(beat.bits.size()) +
                                       " != " + std::to_string(width_in_));
  if (!total_ && header_.size() < kListHeaderBits) {
    std::size_t need = kListHeaderBits - header_.size();
    header_.append(beat.bits.slice(0, std::min(need, beat.bits.size())));
    total_ = framed_length(header_, element_bits_);
  }
  pending_.append(beat.bits);
  received_ += width_in_;

  bool complete = total_ && received_ >= *total_;
  if (complete) {
    if (received_ - width_in_ >= *total_)
      throw Error(ErrorCode::BeatCount, "beat beyond the end of the list");
    if (!beat.last)
      throw Error(ErrorCode::MissingLast, "final list beat lacks the last flag");
    std::size_t keep = static_cast<std::size_t>(*total_ - emitted_);
    if (pending_.any_set_from(keep))
      throw Error(ErrorCode::NonzeroPad, "nonzero padding in final input beat");
    pending_.resize(keep);
  } else if (beat.last) {
    reset();
    throw Error(ErrorCode::Truncated, "list ended before its header-implied length");
  }

  std::vector<Beat> out;
  while (pending_.size() >= width_out_) {
    Beat next{pending_.slice(0, width_out_), false};
    pending_ = pending_.slice(width_out_, pending_.size() - width_out_);
    emitted_ += width_out_;
    next.last = complete && emitted_ == *total_;
    out.push_back(std::move(next));
  }
  if (complete && emitted_ < *total_) {
    Beat tail{pending_, true};
    tail.bits.resize(width_out_);
    out.push_back(std::move(tail));
    emitted_ = *total_;
  }
  if (complete)
    reset();
  return out;
}

std::vector<Beat> repack(std::span<const Beat> beats, const EsiType &element,
                         std::size_t width_in, std::size_t width_out) {
  if (beats.empty())
    throw Error(ErrorCode::BeatCount, "no beats");
  Repacker repacker(bit_width(element), width_in, width_out);
  std::vector<Beat> out;
  bool done = false;
  for (const auto &beat : beats) {
    if (done)
      throw Error(ErrorCode::BeatCount, "beats after the final list beat");
    for (auto &b : repacker.push(beat)) {
      done = done || b.last;
      out.push_back(std::move(b));
    }
  }
  if (!done)
    throw Error(ErrorCode::Truncated, "beats end before the header-implied length");
  return out;
}

//===----------------------------------------------------------------------===//
// Byte form and random values
//===----------------------------------------------------------------------===//

std::vector<std::uint8_t> to_wire_bytes(const MessageValue &value,
                                        const EsiType &type) {
  return encode_message(value, type).to_bytes();
}

BitString bits_from_wire_bytes(std::span<const std::uint8_t> bytes,
                               const EsiType &type) {
  if (!type.is_list())
    return BitString::from_bytes(bytes, bit_width(type));
  if (bytes.size() < 4)
    throw Error(ErrorCode::Length, "list message shorter than its 4-byte count");
  std::uint64_t n = std::uint64_t{bytes[0]} | std::uint64_t{bytes[1]} << 8 |
                    std::uint64_t{bytes[2]} << 16 | std::uint64_t{bytes[3]} << 24;
  return BitString::from_bytes(bytes, kListHeaderBits + n * bit_width(type.element()));
}

MessageValue random_value(const EsiType &type, std::mt19937_64 &rng,
                          const RandomValueOptions &options) {
  auto random_bits = [&](std::size_t width) {
    BitString bits;
    for (std::size_t done = 0; done < width; done += 64) {
      std::size_t chunk = std::min<std::size_t>(64, width - done);
      std::uint64_t word = rng();
      if (chunk < 64)
        word &= (std::uint64_t{1} << chunk) - 1;
      bits.append_uint(word, chunk);
    }
    // Bias towards the edges of the range now and then.
    switch (rng() % 8) {
    case 0: return BitString(width);
    case 1: {
      BitString ones(width);
      for (std::size_t i = 0; i < width; ++i)
        ones.set(i, true);
      return ones;
    }
    default: return bits;
    }
  };
  switch (type.kind()) {
  case TypeKind::UInt:
  case TypeKind::SInt:
    return decode(random_bits(type.int_width()), type);
  case TypeKind::Enum:
    return MessageValue::enumerator(
        static_cast<std::uint32_t>(rng() % type.names().size()));
  case TypeKind::Array: {
    std::vector<MessageValue> elements;
    for (std::uint32_t i = 0; i < type.length(); ++i)
      elements.push_back(random_value(type.element(), rng, options));
    return MessageValue::array(std::move(elements));
  }
  case TypeKind::Struct: {
    std::vector<MessageValue> fields;
    for (const auto &child : type.children())
      fields.push_back(random_value(child, rng, options));
    return MessageValue::structure(std::move(fields));
  }
  case TypeKind::Union: {
    auto variant = static_cast<std::uint32_t>(rng() % type.children().size());
    return MessageValue::union_of(
        variant, random_value(type.children()[variant], rng, options));
  }
  case TypeKind::List: {
    std::uint64_t n = rng() % (std::uint64_t{options.max_list_length} + 1);
    std::vector<MessageValue> elements;
    for (std::uint64_t i = 0; i < n; ++i)
      elements.push_back(random_value(type.element(), rng, options));
    return MessageValue::list(std::move(elements));
  }
  }
  throw Error(ErrorCode::ShapeMismatch, "unknown type kind");
}

} // namespace esic
