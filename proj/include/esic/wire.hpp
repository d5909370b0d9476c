//===- wire.hpp - Message values, bit encoding and beat gearboxing -*- C++ -*-===//
//
// Canonical encoding rules (LSB first throughout):
//  - integers: little-endian bit order, SInt in two's complement;
//  - struct fields and array elements are concatenated from bit 0 in
//    declaration order;
//  - enum = tag; union = tag in the low bits, then the payload, then zero
//    padding up to the widest variant.
// Lists are framed as a 32-bit little-endian element count followed by the
// encoded elements; the framed stream is then split into beats like any other
// message.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "esic/bits.hpp"
#include "esic/types.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace esic {

/// Width of the list length prefix.
inline constexpr std::size_t kListHeaderBits = 32;

/// A value tree mirroring an EsiType.
class MessageValue {
public:
  enum class Kind { UInt, SInt, Enum, Array, Struct, Union, List };

  static MessageValue uint(std::uint64_t value);
  /// Arbitrary-precision magnitude, little-endian 64-bit words.
  static MessageValue uint_words(std::vector<std::uint64_t> magnitude);
  static MessageValue sint(std::int64_t value);
  static MessageValue sint_words(bool negative,
                                 std::vector<std::uint64_t> magnitude);
  static MessageValue enumerator(std::uint32_t index);
  static MessageValue array(std::vector<MessageValue> elements);
  static MessageValue structure(std::vector<MessageValue> fields);
  static MessageValue union_of(std::uint32_t variant, MessageValue payload);
  static MessageValue list(std::vector<MessageValue> elements);

  Kind kind() const noexcept { return kind_; }
  bool negative() const noexcept { return negative_; }
  const std::vector<std::uint64_t> &magnitude() const noexcept {
    return magnitude_;
  }
  /// Enum tag or union variant index.
  std::uint32_t index() const noexcept { return index_; }
  const std::vector<MessageValue> &children() const noexcept {
    return children_;
  }

  /// Integer accessors; throw ErrRange when the value does not fit.
  std::uint64_t as_u64() const;
  std::int64_t as_i64() const;

  friend bool operator==(const MessageValue &, const MessageValue &) = default;

private:
  MessageValue() = default;
  void normalize();

  Kind kind_ = Kind::UInt;
  bool negative_ = false;
  std::vector<std::uint64_t> magnitude_;
  std::uint32_t index_ = 0;
  std::vector<MessageValue> children_;
};

/// Throws ErrShapeMismatch or ErrRange if `value` does not fit `type`.
void validate(const MessageValue &value, const EsiType &type);

BitString encode(const MessageValue &value, const EsiType &type);
/// Throws ErrLength, ErrBadTag. Union padding bits are ignored.
MessageValue decode(const BitString &bits, const EsiType &type);

/// One physical transfer on a channel.
struct Beat {
  BitString bits;
  bool last = false;

  friend bool operator==(const Beat &, const Beat &) = default;
};

/// Splits `bits` into ceil(|bits| / width) beats; the final beat is
/// zero-padded and marked last.
std::vector<Beat> gearbox_split(const BitString &bits, std::size_t width);
/// Inverse of gearbox_split. Throws ErrBeatCount, ErrMissingLast,
/// ErrNonzeroPad.
BitString gearbox_join(std::span<const Beat> beats, std::size_t expected_bits);

/// 32-bit length prefix followed by the encoded elements.
BitString frame_list(const MessageValue &list, const EsiType &element);
/// Inverse of frame_list; `bits` must be exactly the framed stream.
MessageValue unframe_list(const BitString &bits, const EsiType &element);
/// Total framed length implied by a header, or nullopt if fewer than 32 bits.
std::optional<std::uint64_t> framed_length(const BitString &prefix,
                                           std::uint64_t element_bits);

/// Encodes a message for transmission on a channel of type `type`: lists are
/// framed, fixed-size types are encoded.
BitString encode_message(const MessageValue &value, const EsiType &type);
MessageValue decode_message(const BitString &bits, const EsiType &type);

/// Physical width of a channel: bit_width(type), or chunk * element width
/// for lists.
std::uint64_t channel_width(const EsiType &type, std::uint32_t chunk = 1);

/// Streaming list gasket between chunk sizes. Feed beats of width
/// C_in * w; receive beats of width C_out * w as soon as they are complete.
class Repacker {
public:
  Repacker(std::uint64_t element_bits, std::size_t width_in,
           std::size_t width_out);

  /// Consumes one input beat and returns every output beat it completes.
  std::vector<Beat> push(const Beat &beat);
  /// True between messages.
  bool idle() const noexcept { return received_ == 0; }

  std::size_t width_in() const noexcept { return width_in_; }
  std::size_t width_out() const noexcept { return width_out_; }

private:
  void reset();

  std::uint64_t element_bits_;
  std::size_t width_in_;
  std::size_t width_out_;
  BitString pending_;     // received logical bits not yet emitted
  std::uint64_t received_ = 0;
  std::uint64_t emitted_ = 0;
  std::optional<std::uint64_t> total_;
  BitString header_;
};

/// Whole-message convenience wrapper around Repacker. Throws ErrTruncated if
/// the input ends before the header-implied length.
std::vector<Beat> repack(std::span<const Beat> beats, const EsiType &element,
                         std::size_t width_in, std::size_t width_out);

/// Wire byte form of a message: encode_message padded to whole bytes.
std::vector<std::uint8_t> to_wire_bytes(const MessageValue &value,
                                        const EsiType &type);
/// Parses the byte form, validating the exact length (ErrLength) and zero
/// padding. For lists the length is derived from the 4-byte count prefix.
BitString bits_from_wire_bytes(std::span<const std::uint8_t> bytes,
                               const EsiType &type);

/// Deterministic random values for sources and tests.
struct RandomValueOptions {
  std::uint32_t max_list_length = 8;
};
MessageValue random_value(const EsiType &type, std::mt19937_64 &rng,
                          const RandomValueOptions &options = {});

} // namespace esic
