#pragma once

// Per-sample score files.
//
// CSV:  header "index,score", then one "i,score" line per sample with the
//       score printed to 17 significant digits.
// JSON: {"manifest": {...}, "scores": [{"index": i, "score": s}, ...]}

#include <filesystem>
#include <vector>

#include "rankfeat/manifest.hpp"

namespace rankfeat {

void write_scores(const std::filesystem::path& path, const std::vector<double>& scores,
                  const RunManifest& manifest);

/// Reads either format (chosen by extension; anything but .json is CSV).
/// Scores are returned ordered by index.
std::vector<double> read_scores(const std::filesystem::path& path);

/// printf("%.17g")
std::string format_double(double v);

}  // namespace rankfeat
