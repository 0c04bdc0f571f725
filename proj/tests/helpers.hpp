#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rankfeat/cli.hpp"
#include "rankfeat/matrix.hpp"

namespace testing {

inline rankfeat::Matrix to_matrix(const oracle::Dense& d) {
  return rankfeat::Matrix(d.rows, d.cols, d.a);
}

inline oracle::Dense to_dense(const rankfeat::Matrix& m) {
  return {m.rows(), m.cols(), std::vector<double>(m.data().begin(), m.data().end())};
}

inline rankfeat::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed,
                                      double scale = 1.0) {
  return to_matrix(oracle::gaussian(r, c, seed, scale));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// FNV-1a over the file bytes.
inline std::uint64_t file_hash(const std::filesystem::path& p) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : slurp(p)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Fresh directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("rankfeat_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

inline CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rankfeat");
  std::ostringstream out, err;
  const int code = rankfeat::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace testing
