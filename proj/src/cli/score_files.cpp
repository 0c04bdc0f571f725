#include "rankfeat/score_files.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include "rankfeat/error.hpp"

namespace rankfeat {
namespace {

bool is_json(const std::filesystem::path& path) { return path.extension() == ".json"; }

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<double> order_by_index(std::vector<std::pair<long long, double>> rows,
                                   const std::string& where) {
  std::sort(rows.begin(), rows.end());
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != static_cast<long long>(i)) {
      throw FormatError(where + ": sample indices must be 0..n-1 without gaps", 0);
    }
    if (!std::isfinite(rows[i].second)) {
      throw InvalidInputError(where + ": non-finite score at index " + std::to_string(i));
    }
    out.push_back(rows[i].second);
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_scores(const std::filesystem::path& path, const std::vector<double>& scores,
                  const RunManifest& manifest) {
  if (is_json(path)) {
    nlohmann::json j;
    j["manifest"] = manifest.to_json();
    j["scores"] = nlohmann::json::array();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      j["scores"].push_back({{"index", i}, {"score", scores[i]}});
    }
    write_json(path, j);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "index,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) out << i << ',' << format_double(scores[i]) << '\n';
  if (!out) throw IoError("error while writing '" + path.string() + "'");
  write_json(sidecar_path(path), manifest.to_json());
}

std::vector<double> read_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  const std::string where = path.string();
  std::vector<std::pair<long long, double>> rows;

  if (is_json(path)) {
    nlohmann::json j;
    try {
      in >> j;
      for (const auto& entry : j.at("scores")) {
        rows.emplace_back(entry.at("index").get<long long>(), entry.at("score").get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what(), 0);
    }
    return order_by_index(std::move(rows), where);
  }

  std::string line;
  std::size_t offset = 0;
  bool first = true;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    line = trim(line);
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == "index,score") continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(where + ": expected 'index,score'", line_start);
    const std::string idx_text = trim(line.substr(0, comma));
    const std::string score_text = trim(line.substr(comma + 1));
    long long idx = 0;
    const auto [p, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
    if (ec != std::errc() || p != idx_text.data() + idx_text.size()) {
      throw FormatError(where + ": bad index '" + idx_text + "'", line_start);
    }
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(score_text, &used);
      if (used != score_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(where + ": bad score '" + score_text + "'", line_start + comma + 1);
    }
    rows.emplace_back(idx, score);
  }
  return order_by_index(std::move(rows), where);
}

}  // namespace rankfeat
