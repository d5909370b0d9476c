// Test-only generators for random types and values.
#pragma once

#include "esic/types.hpp"

#include <random>
#include <string>
#include <vector>

namespace esic::testsupport {

struct TypeGenOptions {
  int max_depth = 5;
  std::uint32_t max_int_width = 64;
  std::uint32_t max_members = 4;
  std::uint32_t max_array_length = 4;
};

inline std::vector<std::string> member_names(std::mt19937_64 &rng, std::size_t n,
                                             const char *prefix) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i)
    names.push_back(prefix + std::to_string(i) + (rng() % 2 ? "_x" : ""));
  return names;
}

inline EsiType random_fixed_type(std::mt19937_64 &rng, const TypeGenOptions &opt,
                                 int depth = 1) {
  int choice = depth >= opt.max_depth ? static_cast<int>(rng() % 3)
                                      : static_cast<int>(rng() % 6);
  auto width = [&] { return 1 + static_cast<std::uint32_t>(rng() % opt.max_int_width); };
  auto count = [&] { return 1 + static_cast<std::size_t>(rng() % opt.max_members); };
  switch (choice) {
  case 0: return EsiType::uint(width());
  case 1: return EsiType::sint(width());
  case 2: return EsiType::enumeration(member_names(rng, 1 + rng() % 9, "V"));
  case 3:
    return EsiType::array(random_fixed_type(rng, opt, depth + 1),
                          1 + static_cast<std::uint32_t>(rng() % opt.max_array_length));
  default: {
    std::vector<EsiType::Member> members;
    auto names = member_names(rng, count(), "f");
    for (auto &name : names)
      members.emplace_back(name, random_fixed_type(rng, opt, depth + 1));
    return choice == 4 ? EsiType::structure(std::move(members))
                       : EsiType::union_of(std::move(members));
  }
  }
}

/// Fixed-size type, or a list of one at the outermost position.
inline EsiType random_channel_type(std::mt19937_64 &rng, const TypeGenOptions &opt) {
  if (rng() % 4 == 0) {
    TypeGenOptions inner = opt;
    inner.max_depth = std::max(1, opt.max_depth - 1);
    return EsiType::list(random_fixed_type(rng, inner, 1));
  }
  return random_fixed_type(rng, opt);
}

} // namespace esic::testsupport
