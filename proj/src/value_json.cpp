//===- value_json.cpp - JSON form of message values -----------------------===//

#include "esic/value_json.hpp"
#include "esic/error.hpp"

#include <cctype>

namespace esic {

namespace {

std::string words_to_hex(const std::vector<std::uint64_t> &words) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = words.size(); i-- > 0;)
    for (int shift = 60; shift >= 0; shift -= 4)
      out.push_back(digits[(words[i] >> shift) & 0xf]);
  auto first = out.find_first_not_of('0');
  return first == std::string::npos ? "0" : out.substr(first);
}

std::vector<std::uint64_t> hex_to_words(std::string_view hex) {
  if (hex.empty())
    throw Error(ErrorCode::ShapeMismatch, "empty hex literal");
  std::vector<std::uint64_t> words((hex.size() + 15) / 16, 0);
  for (std::size_t i = 0; i < hex.size(); ++i) {
    char c = hex[hex.size() - 1 - i];
    int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
            : (c >= 'a' && c <= 'f')                    ? c - 'a' + 10
            : (c >= 'A' && c <= 'F')                    ? c - 'A' + 10
                                                        : -1;
    if (d < 0)
      throw Error(ErrorCode::ShapeMismatch, "invalid hex literal");
    words[i / 16] |= static_cast<std::uint64_t>(d) << (4 * (i % 16));
  }
  return words;
}

MessageValue integer_from_json(const Json &json, const EsiType &type) {
  bool is_signed = type.kind() == TypeKind::SInt;
  bool negative = false;
  std::vector<std::uint64_t> mag;
  if (json.is_number_unsigned()) {
    mag = {json.get<std::uint64_t>()};
  } else if (json.is_number_integer()) {
    auto v = json.get<std::int64_t>();
    negative = v < 0;
    mag = {negative ? ~static_cast<std::uint64_t>(v) + 1 : static_cast<std::uint64_t>(v)};
  } else if (json.is_string()) {
    std::string_view s = json.get_ref<const std::string &>();
    if (!s.empty() && s[0] == '-') {
      negative = true;
      s.remove_prefix(1);
    }
    if (!s.starts_with("0x"))
      throw Error(ErrorCode::ShapeMismatch, "integer strings must be 0x-prefixed hex");
    mag = hex_to_words(s.substr(2));
  } else {
    throw Error(ErrorCode::ShapeMismatch, "integer expected for " + print_type(type));
  }
  MessageValue v = is_signed ? MessageValue::sint_words(negative, std::move(mag))
                             : MessageValue::uint_words(std::move(mag));
  if (!is_signed && negative && !v.magnitude().empty())
    throw Error(ErrorCode::Range, "negative value for " + print_type(type));
  validate(v, type);
  return v;
}

} // namespace

Json value_to_json(const MessageValue &value, const EsiType &type) {
  validate(value, type);
  switch (type.kind()) {
  case TypeKind::UInt:
  case TypeKind::SInt: {
    const auto &mag = value.magnitude();
    if (mag.size() <= 1) {
      std::uint64_t m = mag.empty() ? 0 : mag[0];
      if (!value.negative())
        return Json(m);
      if (m <= (std::uint64_t{1} << 63))
        return Json(static_cast<std::int64_t>(~m + 1));
    }
    return Json((value.negative() ? "-0x" : "0x") + words_to_hex(mag));
  }
  case TypeKind::Enum:
    return Json(type.names()[value.index()]);
  case TypeKind::Array:
  case TypeKind::List: {
    Json out = Json::array();
    for (const auto &child : value.children())
      out.push_back(value_to_json(child, type.element()));
    return out;
  }
  case TypeKind::Struct: {
    Json out = Json::object();
    for (std::size_t i = 0; i < type.names().size(); ++i)
      out[type.names()[i]] = value_to_json(value.children()[i], type.children()[i]);
    return out;
  }
  case TypeKind::Union: {
    Json out = Json::object();
    out[type.names()[value.index()]] =
        value_to_json(value.children()[0], type.children()[value.index()]);
    return out;
  }
  }
  return Json();
}

MessageValue value_from_json(const Json &json, const EsiType &type) {
  switch (type.kind()) {
  case TypeKind::UInt:
  case TypeKind::SInt:
    return integer_from_json(json, type);
  case TypeKind::Enum: {
    if (!json.is_string())
      throw Error(ErrorCode::ShapeMismatch, "enum variant name expected");
    int idx = type.index_of(json.get_ref<const std::string &>());
    if (idx < 0)
      throw Error(ErrorCode::Range, "unknown enum variant " + json.get<std::string>());
    return MessageValue::enumerator(static_cast<std::uint32_t>(idx));
  }
  case TypeKind::Array:
  case TypeKind::List: {
    if (!json.is_array())
      throw Error(ErrorCode::ShapeMismatch, "array expected for " + print_type(type));
    std::vector<MessageValue> elements;
    for (const auto &item : json)
      elements.push_back(value_from_json(item, type.element()));
    MessageValue v = type.is_list() ? MessageValue::list(std::move(elements))
                                    : MessageValue::array(std::move(elements));
    validate(v, type);
    return v;
  }
  case TypeKind::Struct: {
    if (!json.is_object() || json.size() != type.names().size())
      throw Error(ErrorCode::ShapeMismatch, "object with every field expected for " +
                                                print_type(type));
    std::vector<MessageValue> fields;
    for (std::size_t i = 0; i < type.names().size(); ++i) {
      auto it = json.find(type.names()[i]);
      if (it == json.end())
        throw Error(ErrorCode::ShapeMismatch, "missing field " + type.names()[i]);
      fields.push_back(value_from_json(*it, type.children()[i]));
    }
    return MessageValue::structure(std::move(fields));
  }
  case TypeKind::Union: {
    if (!json.is_object() || json.size() != 1)
      throw Error(ErrorCode::ShapeMismatch, "single-key object expected for union");
    int idx = type.index_of(json.begin().key());
    if (idx < 0)
      throw Error(ErrorCode::ShapeMismatch, "unknown union variant " + json.begin().key());
    return MessageValue::union_of(static_cast<std::uint32_t>(idx),
                                  value_from_json(json.begin().value(),
                                                  type.children()[static_cast<std::size_t>(idx)]));
  }
  }
  throw Error(ErrorCode::ShapeMismatch, "unknown type kind");
}

} // namespace esic
