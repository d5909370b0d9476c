//===- types.hpp - The message type system ----------------------*- C++ -*-===//
//
// EsiType is a recursive value type covering unsigned and signed integers of
// arbitrary width, enums, arrays, structs, unions and (outermost only) lists.
// Types are immutable once built; factories validate every invariant.
//
// Canonical text grammar:
//   uintN | sintN | enum{A,B} | array<T,N> | struct{a:T,b:T}
//   | union{a:T,b:T} | list<T>
// print_type emits no whitespace; parse_type accepts any.
//
//===----------------------------------------------------------------------===//

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace esic {

/// Upper bound on the declared width of a scalar integer type.
inline constexpr std::uint32_t kMaxScalarWidth = 4096;
/// Upper bound on the total encoded width of any fixed-size type.
inline constexpr std::uint64_t kMaxTypeBits = std::uint64_t{1} << 32;

enum class TypeKind { UInt, SInt, Enum, Array, Struct, Union, List };

std::string_view to_string(TypeKind kind);

/// Tag width for an enum or union with `count` variants: max(1, ceil(log2 n)).
std::uint32_t tag_width(std::size_t count);

class EsiType {
public:
  using Member = std::pair<std::string, EsiType>;

  static EsiType uint(std::uint32_t width);
  static EsiType sint(std::uint32_t width);
  static EsiType enumeration(std::vector<std::string> variants);
  static EsiType array(EsiType element, std::uint32_t length);
  static EsiType structure(std::vector<Member> fields);
  static EsiType union_of(std::vector<Member> variants);
  static EsiType list(EsiType element);

  TypeKind kind() const noexcept { return kind_; }
  bool is_list() const noexcept { return kind_ == TypeKind::List; }
  bool is_fixed_size() const noexcept { return kind_ != TypeKind::List; }

  /// Declared width of a UInt/SInt.
  std::uint32_t int_width() const noexcept { return int_width_; }
  /// Array length.
  std::uint32_t length() const noexcept { return length_; }
  /// Enum variant names, or struct field / union variant names.
  const std::vector<std::string> &names() const noexcept { return names_; }
  /// Member types of structs/unions; the single element of arrays/lists.
  const std::vector<EsiType> &children() const noexcept { return children_; }
  const EsiType &element() const;

  /// Index of a named field/variant/enumerator, or -1.
  int index_of(std::string_view name) const;

  friend bool operator==(const EsiType &, const EsiType &) = default;

private:
  EsiType() = default;
  void finish();
  static EsiType make_aggregate(TypeKind kind, std::vector<Member> members);

  TypeKind kind_ = TypeKind::UInt;
  std::uint32_t int_width_ = 0;
  std::uint32_t length_ = 0;
  std::uint64_t bits_ = 0;
  std::vector<std::string> names_;
  std::vector<EsiType> children_;

  friend std::uint64_t bit_width(const EsiType &);
};

/// Encoded width of a fixed-size type. Throws ErrVariableSize for lists.
std::uint64_t bit_width(const EsiType &type);

/// Structural equality including member names and order.
bool type_equal(const EsiType &a, const EsiType &b);

std::string print_type(const EsiType &type);

/// Throws SyntaxError (with byte offset) or ErrNestedList.
EsiType parse_type(std::string_view text);

/// Stable 64-bit identifier: FNV-1a over the canonical text.
std::uint64_t type_id(const EsiType &type);

bool is_identifier(std::string_view name);

} // namespace esic
