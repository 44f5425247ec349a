#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scorecard/table.hpp"

namespace testing {

inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::path(SCORECARD_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

// Table with a binary target "y" followed by the given columns.
inline scorecard::DataTable make_table(std::vector<double> y, std::vector<scorecard::ColumnSpec> specs,
                                       std::vector<std::vector<double>> cols) {
  scorecard::Schema s;
  s.target = "y";
  s.columns.push_back({"y", scorecard::ColumnKind::kBinary, {}});
  for (auto& c : specs) s.columns.push_back(std::move(c));
  std::vector<std::vector<double>> all;
  all.push_back(y);
  for (auto& c : cols) all.push_back(std::move(c));
  std::vector<std::uint64_t> ids(y.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return scorecard::DataTable(std::move(s), std::move(ids), std::move(all));
}

}  // namespace testing
