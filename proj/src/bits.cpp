//===- bits.cpp - BitString implementation --------------------------------===//

#include "esic/bits.hpp"
#include "esic/error.hpp"

#include <cstdio>

namespace esic {

namespace {
constexpr std::size_t word_count(std::size_t bits) { return (bits + 63) / 64; }

int hex_digit(char c) {
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  if (c >= 'A' && c <= 'F')
    return c - 'A' + 10;
  return -1;
}
} // namespace

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

BitString::BitString(std::size_t size)
    : words_(word_count(size), 0), size_(size) {}

BitString BitString::from_uint(std::uint64_t value, std::size_t width) {
  BitString out;
  out.append_uint(value, width);
  return out;
}

BitString BitString::from_binary(std::string_view msb_first) {
  BitString out(msb_first.size());
  for (std::size_t i = 0; i < msb_first.size(); ++i) {
    char c = msb_first[msb_first.size() - 1 - i];
    if (c != '0' && c != '1')
      throw Error(ErrorCode::Syntax, "binary digit expected");
    out.set(i, c == '1');
  }
  return out;
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes,
                                std::size_t size) {
  if (bytes.size() != (size + 7) / 8)
    throw Error(ErrorCode::Length,
                "expected " + std::to_string((size + 7) / 8) +
                    " bytes for " + std::to_string(size) + " bits, got " +
                    std::to_string(bytes.size()));
  BitString out(bytes.size() * 8);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    out.words_[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << (8 * (i % 8));
  if (out.any_set_from(size))
    throw Error(ErrorCode::NonzeroPad, "byte padding bits must be zero");
  out.resize(size);
  return out;
}

BitString BitString::from_hex(std::string_view hex, std::size_t size) {
  if (hex.size() % 2 != 0)
    throw Error(ErrorCode::Syntax, "odd number of hex digits");
  std::vector<std::uint8_t> bytes(hex.size() / 2);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    int hi = hex_digit(hex[2 * i]), lo = hex_digit(hex[2 * i + 1]);
    if (hi < 0 || lo < 0)
      throw Error(ErrorCode::Syntax, "invalid hex digit");
    bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return from_bytes(bytes, size);
}

bool BitString::get(std::size_t index) const {
  if (index >= size_)
    throw Error(ErrorCode::Range, "bit index out of range");
  return (words_[index / 64] >> (index % 64)) & 1;
}

void BitString::set(std::size_t index, bool value) {
  if (index >= size_)
    throw Error(ErrorCode::Range, "bit index out of range");
  std::uint64_t mask = std::uint64_t{1} << (index % 64);
  if (value)
    words_[index / 64] |= mask;
  else
    words_[index / 64] &= ~mask;
}

void BitString::push_back(bool value) {
  resize(size_ + 1);
  if (value)
    words_[(size_ - 1) / 64] |= std::uint64_t{1} << ((size_ - 1) % 64);
}

void BitString::resize(std::size_t size) {
  size_ = size;
  words_.resize(word_count(size), 0);
  clear_tail();
}

void BitString::clear_tail() {
  if (size_ % 64 != 0)
    words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
}

void BitString::append_uint(std::uint64_t value, std::size_t width) {
  if (width > 64)
    throw Error(ErrorCode::Range, "append_uint width exceeds 64");
  if (width < 64 && (value >> width) != 0)
    throw Error(ErrorCode::Range, "value does not fit in width");
  if (width == 0)
    return;
  std::size_t pos = size_;
  resize(size_ + width);
  std::size_t word = pos / 64, offset = pos % 64;
  words_[word] |= value << offset;
  if (offset != 0 && offset + width > 64)
    words_[word + 1] |= value >> (64 - offset);
}

void BitString::append(const BitString &other) {
  std::size_t full = other.size_ / 64;
  for (std::size_t i = 0; i < full; ++i)
    append_uint(other.words_[i], 64);
  if (other.size_ % 64 != 0)
    append_uint(other.words_[full], other.size_ % 64);
}

std::uint64_t BitString::read_uint(std::size_t pos, std::size_t width) const {
  if (width > 64 || pos + width > size_)
    throw Error(ErrorCode::Range, "read_uint out of range");
  if (width == 0)
    return 0;
  std::size_t word = pos / 64, offset = pos % 64;
  std::uint64_t value = words_[word] >> offset;
  if (offset != 0 && offset + width > 64)
    value |= words_[word + 1] << (64 - offset);
  if (width < 64)
    value &= (std::uint64_t{1} << width) - 1;
  return value;
}

BitString BitString::slice(std::size_t pos, std::size_t length) const {
  if (pos + length > size_)
    throw Error(ErrorCode::Range, "slice out of range");
  BitString out;
  out.words_.reserve(word_count(length));
  std::size_t done = 0;
  while (done < length) {
    std::size_t chunk = std::min<std::size_t>(64, length - done);
    out.append_uint(read_uint(pos + done, chunk), chunk);
    done += chunk;
  }
  return out;
}

bool BitString::any_set_from(std::size_t pos) const {
  if (pos >= size_)
    return false;
  std::size_t word = pos / 64;
  if (words_[word] >> (pos % 64))
    return true;
  for (std::size_t i = word + 1; i < words_.size(); ++i)
    if (words_[i])
      return true;
  return false;
}

std::vector<std::uint8_t> BitString::to_bytes() const {
  std::vector<std::uint8_t> bytes((size_ + 7) / 8);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8)));
  return bytes;
}

std::string BitString::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (std::uint8_t byte : to_bytes()) {
    out.push_back(digits[byte >> 4]);
    out.push_back(digits[byte & 0xf]);
  }
  return out;
}

std::string BitString::to_binary() const {
  std::string out(size_, '0');
  for (std::size_t i = 0; i < size_; ++i)
    if (get(i))
      out[size_ - 1 - i] = '1';
  return out;
}

std::uint64_t BitString::digest() const {
  std::uint8_t header[8];
  for (int i = 0; i < 8; ++i)
    header[i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(size_) >> (8 * i));
  auto bytes = to_bytes();
  return fnv1a64(bytes, fnv1a64(header));
}

} // namespace esic
