//===- error.hpp - Error codes shared by all esic modules -------*- C++ -*-===//
//
// Every failure that crosses a module boundary is an esic::Error carrying a
// stable ErrorCode. Diagnostics about user designs are not errors; see
// system.hpp.
//
//===----------------------------------------------------------------------===//

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace esic {

enum class ErrorCode {
  // types
  Syntax,
  NestedList,
  InvalidType,
  VariableSize,
  // wire
  ShapeMismatch,
  Range,
  Length,
  BadTag,
  BeatCount,
  NonzeroPad,
  MissingLast,
  Truncated,
  // fabric / sim
  Unchecked,
  CombLoop,
  BehaviorViolation,
  InvalidGraph,
  // cosim
  Protocol,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::Syntax: return "ErrSyntax";
  case ErrorCode::NestedList: return "ErrNestedList";
  case ErrorCode::InvalidType: return "ErrInvalidType";
  case ErrorCode::VariableSize: return "ErrVariableSize";
  case ErrorCode::ShapeMismatch: return "ErrShapeMismatch";
  case ErrorCode::Range: return "ErrRange";
  case ErrorCode::Length: return "ErrLength";
  case ErrorCode::BadTag: return "ErrBadTag";
  case ErrorCode::BeatCount: return "ErrBeatCount";
  case ErrorCode::NonzeroPad: return "ErrNonzeroPad";
  case ErrorCode::MissingLast: return "ErrMissingLast";
  case ErrorCode::Truncated: return "ErrTruncated";
  case ErrorCode::Unchecked: return "ErrUnchecked";
  case ErrorCode::CombLoop: return "ErrCombLoop";
  case ErrorCode::BehaviorViolation: return "ErrBehaviorViolation";
  case ErrorCode::InvalidGraph: return "ErrInvalidGraph";
  case ErrorCode::Protocol: return "ErrProtocol";
  case ErrorCode::Io: return "ErrIo";
  }
  return "ErrUnknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

/// A syntax error in the textual type grammar; position is a byte offset.
class SyntaxError : public Error {
public:
  SyntaxError(std::size_t position, const std::string &message)
      : Error(ErrorCode::Syntax,
              message + " at offset " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

} // namespace esic
