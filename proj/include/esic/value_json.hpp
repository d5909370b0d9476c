//===- value_json.hpp - JSON form of message values -------------*- C++ -*-===//
//
// Integers that fit in 64 bits are JSON numbers, wider ones are "0x..." hex
// strings (with a leading '-' when negative). Enums are their variant name,
// structs are objects in field order, unions are single-key objects and
// arrays/lists are JSON arrays.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "esic/types.hpp"
#include "esic/wire.hpp"

#include <json.hpp>

namespace esic {

using Json = nlohmann::ordered_json;

Json value_to_json(const MessageValue &value, const EsiType &type);
/// Throws ErrShapeMismatch / ErrRange on malformed input.
MessageValue value_from_json(const Json &json, const EsiType &type);

} // namespace esic
