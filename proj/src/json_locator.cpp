//===- json_locator.cpp - Element path to line mapping --------------------===//
//
// A minimal JSON scanner that records the line on which every value starts.
// It runs only on text nlohmann/json has already accepted, so it does no
// error recovery.
//
//===----------------------------------------------------------------------===//

#include "esic/system.hpp"

#include <cctype>

namespace esic {

int line_of_offset(std::string_view text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n')
      ++line;
  return line;
}

namespace {

class Locator {
public:
  explicit Locator(std::string_view text) : text_(text) {}

  std::map<std::string, int> run() {
    skip_ws();
    if (pos_ < text_.size())
      value("");
    return std::move(lines_);
  }

private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n')
        ++line_;
      ++pos_;
    }
  }

  std::string string() {
    std::string out;
    ++pos_; // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size())
        ++pos_;
      out.push_back(text_[pos_++]);
    }
    ++pos_;
    return out;
  }

  void value(const std::string &path) {
    skip_ws();
    lines_.emplace(path, line_);
    if (pos_ >= text_.size())
      return;
    char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      if (text_[pos_] == '}') {
        ++pos_;
        return;
      }
      while (pos_ < text_.size()) {
        skip_ws();
        std::string key = string();
        skip_ws();
        ++pos_; // ':'
        value(path.empty() ? key : path + "." + key);
        skip_ws();
        if (text_[pos_++] == '}')
          return;
      }
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      if (text_[pos_] == ']') {
        ++pos_;
        return;
      }
      for (std::size_t i = 0; pos_ < text_.size(); ++i) {
        value(path + "[" + std::to_string(i) + "]");
        skip_ws();
        if (text_[pos_++] == ']')
          return;
      }
    } else if (c == '"') {
      string();
    } else {
      while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' &&
             text_[pos_] != ']' && !std::isspace(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

} // namespace

std::map<std::string, int> locate_json_paths(std::string_view text) {
  return Locator(text).run();
}

} // namespace esic
