//===- types.cpp - Type construction, printing and parsing ----------------===//

#include "esic/types.hpp"
#include "esic/bits.hpp"
#include "esic/error.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace esic {

std::string_view to_string(TypeKind kind) {
  switch (kind) {
  case TypeKind::UInt: return "uint";
  case TypeKind::SInt: return "sint";
  case TypeKind::Enum: return "enum";
  case TypeKind::Array: return "array";
  case TypeKind::Struct: return "struct";
  case TypeKind::Union: return "union";
  case TypeKind::List: return "list";
  }
  return "?";
}

std::uint32_t tag_width(std::size_t count) {
  std::uint32_t bits = 0;
  while ((std::size_t{1} << bits) < count)
    ++bits;
  return std::max<std::uint32_t>(1, bits);
}

bool is_identifier(std::string_view name) {
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) ||
                        name[0] == '_'))
    return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

namespace {

void check_names(const std::vector<std::string> &names, const char *what) {
  if (names.empty())
    throw Error(ErrorCode::InvalidType,
                std::string(what) + " needs at least one member");
  std::set<std::string_view> seen;
  for (const auto &name : names) {
    if (!is_identifier(name))
      throw Error(ErrorCode::InvalidType,
                  std::string(what) + " member name '" + name +
                      "' is not an identifier");
    if (!seen.insert(name).second)
      throw Error(ErrorCode::InvalidType,
                  std::string(what) + " member name '" + name +
                      "' is duplicated");
  }
}

void require_fixed(const EsiType &type, const char *context) {
  if (type.is_list())
    throw Error(ErrorCode::NestedList,
                std::string("list may not appear inside ") + context);
}

} // namespace

void EsiType::finish() {
  auto checked = [](std::uint64_t bits) {
    if (bits > kMaxTypeBits)
      throw Error(ErrorCode::InvalidType, "type exceeds maximum encoded width");
    return bits;
  };
  switch (kind_) {
  case TypeKind::UInt:
  case TypeKind::SInt:
    bits_ = int_width_;
    break;
  case TypeKind::Enum:
    bits_ = tag_width(names_.size());
    break;
  case TypeKind::Array:
    bits_ = checked(std::uint64_t{length_} * children_[0].bits_);
    break;
  case TypeKind::Struct: {
    std::uint64_t sum = 0;
    for (const auto &child : children_)
      sum = checked(sum + child.bits_);
    bits_ = sum;
    break;
  }
  case TypeKind::Union: {
    std::uint64_t widest = 0;
    for (const auto &child : children_)
      widest = std::max(widest, child.bits_);
    bits_ = checked(tag_width(children_.size()) + widest);
    break;
  }
  case TypeKind::List:
    bits_ = 0;
    break;
  }
}

EsiType EsiType::uint(std::uint32_t width) {
  if (width < 1 || width > kMaxScalarWidth)
    throw Error(ErrorCode::InvalidType,
                "integer width " + std::to_string(width) + " outside 1.." +
                    std::to_string(kMaxScalarWidth));
  EsiType t;
  t.kind_ = TypeKind::UInt;
  t.int_width_ = width;
  t.finish();
  return t;
}

EsiType EsiType::sint(std::uint32_t width) {
  EsiType t = uint(width);
  t.kind_ = TypeKind::SInt;
  return t;
}

EsiType EsiType::enumeration(std::vector<std::string> variants) {
  check_names(variants, "enum");
  EsiType t;
  t.kind_ = TypeKind::Enum;
  t.names_ = std::move(variants);
  t.finish();
  return t;
}

EsiType EsiType::array(EsiType element, std::uint32_t length) {
  require_fixed(element, "an array");
  if (length < 1)
    throw Error(ErrorCode::InvalidType, "array length must be at least 1");
  EsiType t;
  t.kind_ = TypeKind::Array;
  t.length_ = length;
  t.children_.push_back(std::move(element));
  t.finish();
  return t;
}

EsiType EsiType::structure(std::vector<Member> fields) {
  return make_aggregate(TypeKind::Struct, std::move(fields));
}

EsiType EsiType::union_of(std::vector<Member> variants) {
  return make_aggregate(TypeKind::Union, std::move(variants));
}

EsiType EsiType::make_aggregate(TypeKind kind, std::vector<Member> members) {
  const char *what = kind == TypeKind::Struct ? "struct" : "union";
  EsiType t;
  t.kind_ = kind;
  for (auto &[name, type] : members) {
    require_fixed(type, kind == TypeKind::Struct ? "a struct" : "a union");
    t.names_.push_back(std::move(name));
    t.children_.push_back(std::move(type));
  }
  check_names(t.names_, what);
  t.finish();
  return t;
}

EsiType EsiType::list(EsiType element) {
  require_fixed(element, "a list");
  EsiType t;
  t.kind_ = TypeKind::List;
  t.children_.push_back(std::move(element));
  t.finish();
  return t;
}

const EsiType &EsiType::element() const {
  if (kind_ != TypeKind::Array && kind_ != TypeKind::List)
    throw Error(ErrorCode::InvalidType, "element() on a non-array type");
  return children_[0];
}

int EsiType::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

std::uint64_t bit_width(const EsiType &type) {
  if (type.is_list())
    throw Error(ErrorCode::VariableSize, "list types have no fixed bit width");
  return type.bits_;
}

bool type_equal(const EsiType &a, const EsiType &b) { return a == b; }

namespace {

void print_into(const EsiType &t, std::string &out) {
  switch (t.kind()) {
  case TypeKind::UInt:
  case TypeKind::SInt:
    out += to_string(t.kind());
    out += std::to_string(t.int_width());
    return;
  case TypeKind::Enum:
    out += "enum{";
    for (std::size_t i = 0; i < t.names().size(); ++i) {
      if (i)
        out += ',';
      out += t.names()[i];
    }
    out += '}';
    return;
  case TypeKind::Array:
    out += "array<";
    print_into(t.element(), out);
    out += ',';
    out += std::to_string(t.length());
    out += '>';
    return;
  case TypeKind::Struct:
  case TypeKind::Union:
    out += to_string(t.kind());
    out += '{';
    for (std::size_t i = 0; i < t.names().size(); ++i) {
      if (i)
        out += ',';
      out += t.names()[i];
      out += ':';
      print_into(t.children()[i], out);
    }
    out += '}';
    return;
  case TypeKind::List:
    out += "list<";
    print_into(t.element(), out);
    out += '>';
    return;
  }
}

class TypeParser {
public:
  explicit TypeParser(std::string_view text) : text_(text) {}

  EsiType parse_top() {
    EsiType t = parse(/*nested=*/false);
    skip_ws();
    if (pos_ != text_.size())
      throw SyntaxError(pos_, "unexpected trailing characters");
    return t;
  }

private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw SyntaxError(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string_view identifier() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_'))
      ++pos_;
    std::string_view id = text_.substr(start, pos_ - start);
    if (!is_identifier(id))
      throw SyntaxError(start, "identifier expected");
    return id;
  }

  std::uint32_t number() {
    skip_ws();
    std::size_t start = pos_;
    std::uint64_t value = 0;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      value = value * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
      if (value > 0xffffffffULL)
        throw SyntaxError(start, "number too large");
      ++pos_;
    }
    if (start == pos_)
      throw SyntaxError(start, "number expected");
    return static_cast<std::uint32_t>(value);
  }

  template <typename F> EsiType build(std::size_t at, F &&make) {
    try {
      return make();
    } catch (const SyntaxError &) {
      throw;
    } catch (const Error &e) {
      if (e.code() == ErrorCode::NestedList)
        throw;
      throw SyntaxError(at, e.what());
    }
  }

  std::vector<EsiType::Member> members(bool nested) {
    std::vector<EsiType::Member> out;
    expect('{');
    do {
      std::string name(identifier());
      expect(':');
      out.emplace_back(std::move(name), parse(nested));
    } while (accept(','));
    expect('}');
    return out;
  }

  EsiType parse(bool nested) {
    skip_ws();
    std::size_t start = pos_;
    std::string_view word = identifier();
    if ((word.starts_with("uint") || word.starts_with("sint")) &&
        word.size() > 4 &&
        std::all_of(word.begin() + 4, word.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      std::uint64_t width = 0;
      for (char c : word.substr(4)) {
        width = width * 10 + static_cast<std::uint64_t>(c - '0');
        if (width > kMaxScalarWidth)
          break;
      }
      if (width < 1 || width > kMaxScalarWidth)
        throw SyntaxError(start, "integer width outside 1.." +
                                     std::to_string(kMaxScalarWidth));
      auto w = static_cast<std::uint32_t>(width);
      return word[0] == 'u' ? EsiType::uint(w) : EsiType::sint(w);
    }
    if (word == "enum") {
      std::vector<std::string> names;
      expect('{');
      do
        names.emplace_back(identifier());
      while (accept(','));
      expect('}');
      return build(start, [&] { return EsiType::enumeration(std::move(names)); });
    }
    if (word == "array") {
      expect('<');
      EsiType element = parse(true);
      expect(',');
      std::uint32_t length = number();
      expect('>');
      return build(start, [&] { return EsiType::array(std::move(element), length); });
    }
    if (word == "struct") {
      auto fields = members(true);
      return build(start, [&] { return EsiType::structure(std::move(fields)); });
    }
    if (word == "union") {
      auto variants = members(true);
      return build(start, [&] { return EsiType::union_of(std::move(variants)); });
    }
    if (word == "list") {
      if (nested)
        throw Error(ErrorCode::NestedList,
                    "list at offset " + std::to_string(start) +
                        " is nested inside another type");
      expect('<');
      EsiType element = parse(true);
      expect('>');
      return EsiType::list(std::move(element));
    }
    throw SyntaxError(start, "unknown type '" + std::string(word) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

} // namespace

std::string print_type(const EsiType &type) {
  std::string out;
  print_into(type, out);
  return out;
}

EsiType parse_type(std::string_view text) { return TypeParser(text).parse_top(); }

std::uint64_t type_id(const EsiType &type) { return fnv1a64(print_type(type)); }

} // namespace esic
