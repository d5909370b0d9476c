//===- bits.hpp - Bit strings and the FNV-1a hash ---------------*- C++ -*-===//
//
// BitString is the in-memory form of every encoded message and beat. Bit 0 is
// the least significant and first transmitted bit. The byte serialization pads
// with zeros to a whole number of bytes, bit 0 landing in bit 0 of byte 0.
//
//===----------------------------------------------------------------------===//

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace esic {

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::span<const std::uint8_t> data,
                                std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (std::uint8_t byte : data) {
    hash ^= byte;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

constexpr std::uint64_t fnv1a64(std::string_view text,
                                std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (char c : text) {
    hash ^= static_cast<std::uint8_t>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// Lowercase, zero-padded 16-digit hex rendering of a 64-bit value.
std::string hex64(std::uint64_t value);

class BitString {
public:
  BitString() = default;
  /// A string of `size` zero bits.
  explicit BitString(std::size_t size);

  /// The low `width` bits of `value`; higher bits of `value` must be zero.
  static BitString from_uint(std::uint64_t value, std::size_t width);
  /// Parses a string of '0'/'1' characters written most significant first.
  static BitString from_binary(std::string_view msb_first);
  /// Inverse of to_bytes. Throws ErrLength when the byte count is not
  /// ceil(size / 8) and ErrNonzeroPad when a padding bit is set.
  static BitString from_bytes(std::span<const std::uint8_t> bytes,
                              std::size_t size);
  static BitString from_hex(std::string_view hex, std::size_t size);

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  bool get(std::size_t index) const;
  void set(std::size_t index, bool value);
  void push_back(bool value);
  void resize(std::size_t size);

  void append(const BitString &other);
  void append_uint(std::uint64_t value, std::size_t width);

  /// Reads `width` (<= 64) bits starting at `pos`.
  std::uint64_t read_uint(std::size_t pos, std::size_t width) const;
  BitString slice(std::size_t pos, std::size_t length) const;
  /// True if any bit at or above `pos` is set.
  bool any_set_from(std::size_t pos) const;

  std::vector<std::uint8_t> to_bytes() const;
  std::string to_hex() const;
  /// Most significant bit first, for diagnostics and tests.
  std::string to_binary() const;

  /// FNV-1a over the bit length (8 bytes, little-endian) and the byte form.
  std::uint64_t digest() const;

  const std::vector<std::uint64_t> &words() const noexcept { return words_; }

  friend bool operator==(const BitString &, const BitString &) = default;

private:
  void clear_tail();

  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

} // namespace esic
