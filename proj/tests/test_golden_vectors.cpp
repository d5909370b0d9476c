#include "esic/types.hpp"
#include "esic/value_json.hpp"
#include "esic/wire.hpp"
#include "support/golden_corpus.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace esic;

namespace {

std::vector<std::string> corpus_file() {
  std::ifstream in(std::filesystem::path(ESIC_SOURCE_DIR) / "testdata/golden_vectors.jsonl");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    lines.push_back(line);
  return lines;
}

std::vector<std::uint8_t> unhex(const std::string &hex) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
  return out;
}

std::string tohex(const std::vector<std::uint8_t> &bytes) {
  static const char *digits = "0123456789abcdef";
  std::string s;
  for (auto b : bytes) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

} // namespace

TEST(GoldenVectors, FileMatchesGenerator) {
  auto file = corpus_file();
  ASSERT_GE(file.size(), 500u);
  EXPECT_EQ(file, testsupport::golden_corpus())
      << "regenerate with gen_golden_vectors testdata/golden_vectors.jsonl";
}

TEST(GoldenVectors, LibraryAgreesWithEveryVector) {
  std::set<TypeKind> kinds;
  std::size_t max_list = 0;
  for (const auto &line : corpus_file()) {
    auto j = Json::parse(line);
    ASSERT_EQ(j.size(), 3u) << line;
    auto text = j["type"].get<std::string>();
    auto type = parse_type(text);
    ASSERT_EQ(print_type(type), text) << "type text is not canonical";
    auto value = value_from_json(j["value"], type);
    EXPECT_EQ(value_to_json(value, type), j["value"]) << line;
    auto hex = j["hex"].get<std::string>();
    ASSERT_EQ(tohex(to_wire_bytes(value, type)), hex) << line;
    EXPECT_EQ(decode_message(bits_from_wire_bytes(unhex(hex), type), type), value) << line;
    kinds.insert(type.kind());
    if (type.kind() == TypeKind::List)
      max_list = std::max(max_list, value.children().size());
  }
  EXPECT_EQ(kinds.size(), 7u); // every type constructor appears
  EXPECT_GT(max_list, 32u);
}
