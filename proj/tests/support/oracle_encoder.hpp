// Test-only reference encoder: a direct transcription of the packing rules
// over std::vector<bool>, restricted to scalars of at most 64 bits. Shares no
// code with esic::encode.
#pragma once

#include "esic/types.hpp"
#include "esic/wire.hpp"

#include <vector>

namespace esic::testsupport {

inline void oracle_push_int(std::vector<bool> &out, std::uint64_t v, std::size_t w) {
  for (std::size_t i = 0; i < w; ++i)
    out.push_back(i < 64 && ((v >> i) & 1));
}

inline std::size_t oracle_tag_bits(std::size_t n) {
  std::size_t b = 0;
  while ((std::size_t{1} << b) < n)
    ++b;
  return b == 0 ? 1 : b;
}

inline std::size_t oracle_width(const EsiType &t) {
  switch (t.kind()) {
  case TypeKind::UInt:
  case TypeKind::SInt: return t.int_width();
  case TypeKind::Enum: return oracle_tag_bits(t.names().size());
  case TypeKind::Array: return t.length() * oracle_width(t.element());
  case TypeKind::Struct: {
    std::size_t s = 0;
    for (const auto &c : t.children())
      s += oracle_width(c);
    return s;
  }
  case TypeKind::Union: {
    std::size_t m = 0;
    for (const auto &c : t.children())
      m = std::max(m, oracle_width(c));
    return oracle_tag_bits(t.children().size()) + m;
  }
  case TypeKind::List: return 0;
  }
  return 0;
}

inline void oracle_encode(const MessageValue &v, const EsiType &t, std::vector<bool> &out) {
  switch (t.kind()) {
  case TypeKind::UInt: oracle_push_int(out, v.as_u64(), t.int_width()); return;
  case TypeKind::SInt: {
    auto raw = static_cast<std::uint64_t>(v.as_i64());
    for (std::size_t i = 0; i < t.int_width(); ++i)
      out.push_back(i < 64 ? ((raw >> i) & 1) : (raw >> 63) & 1);
    return;
  }
  case TypeKind::Enum: oracle_push_int(out, v.index(), oracle_tag_bits(t.names().size())); return;
  case TypeKind::Array:
    for (const auto &c : v.children())
      oracle_encode(c, t.element(), out);
    return;
  case TypeKind::Struct:
    for (std::size_t i = 0; i < t.children().size(); ++i)
      oracle_encode(v.children()[i], t.children()[i], out);
    return;
  case TypeKind::Union: {
    std::size_t start = out.size();
    oracle_push_int(out, v.index(), oracle_tag_bits(t.children().size()));
    oracle_encode(v.children()[0], t.children()[v.index()], out);
    out.resize(start + oracle_width(t), false);
    return;
  }
  case TypeKind::List:
    oracle_push_int(out, v.children().size(), 32);
    for (const auto &c : v.children())
      oracle_encode(c, t.element(), out);
    return;
  }
}

inline BitString to_bitstring(const std::vector<bool> &bits) {
  BitString out;
  for (bool b : bits)
    out.push_back(b);
  return out;
}

} // namespace esic::testsupport
