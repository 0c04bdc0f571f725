#pragma once

// Seeded synthetic features with a spiked spectrum: a Gaussian bulk plus one
// planted rank-1 component whose singular value is `spike` times the expected
// top singular value of the bulk. Every generator is a pure function of its
// config and seed (see random.hpp for the stream definition).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankfeat/evalkit.hpp"
#include "rankfeat/pipeline.hpp"
#include "rankfeat/scoring.hpp"

namespace rankfeat {

struct SynthConfig {
  std::size_t channels = 64;
  std::size_t height = 14;
  std::size_t width = 14;
  double spike = 0.0;
  double bulk_scale = 1.0;
  std::uint64_t seed = 0;
  bool nonnegative = false;
  // Left direction of the planted component; random when unset.
  std::optional<Vector> spike_direction;

  void validate() const;
};

/// Expected top singular value of a C x HW standard Gaussian matrix,
/// sqrt(C) + sqrt(HW).
double bulk_top_singular(std::size_t channels, std::size_t spatial);

/// X = spike * bulk_scale * bulk_top * u v^T + bulk_scale * G, clamped at 0
/// when `nonnegative`. Draw order: u (C), v (HW), G (row-major).
FeatureMatrix gen_feature(const SynthConfig& cfg);

/// Per-sample seeds are cfg.seed + index.
std::vector<FeatureMatrix> gen_features(const SynthConfig& cfg, std::size_t count,
                                        std::size_t first_index = 0, std::size_t jobs = 1);

/// W and b with independent N(0, 1/C) entries (W first, row-major, then b).
ClassifierHead gen_head(std::size_t classes, std::size_t channels, std::uint64_t seed);

/// C x C_prev layer: N(0, 1/C_prev) bulk plus a planted component of
/// singular value spike * (sqrt(C) + sqrt(C_prev)) / sqrt(C_prev).
LinearLayer gen_layer(std::size_t channels, std::size_t prev_channels, double spike,
                      std::uint64_t seed);

struct LayerPathway {
  LinearLayer layer;
  // Plant the OOD spike along the layer's dominant input direction.
  bool align_ood_spike = true;
};

struct BenchmarkOptions {
  std::vector<Method> methods = {Method::kEnergy, Method::kRankFeat};
  DominantMethod dominant = DominantMethod::exact();
  OdinConfig odin;
  double react_percentile = 90.0;
  // Size of the held-out ID set used to calibrate ReAct's tau.
  std::size_t react_calibration = 100;
  std::optional<LayerPathway> pathway;
  std::size_t jobs = 1;
};

struct BenchmarkResult {
  std::vector<ScoreSet> score_sets;  // one per method, label = method name
  std::vector<EvalReport> reports;   // same order
  double react_tau = 0.0;            // 0 unless ReAct ran
  // ID samples use seeds id.seed + i, OOD samples ood.seed + i, ReAct
  // calibration samples id.seed + n_per_side + i.
  std::vector<std::uint64_t> seeds_used;
};

/// Draws `n_per_side` ID and OOD features and scores both with every method.
/// With a pathway, the generated features feed the layer and the configs'
/// channel count is the layer's input width.
BenchmarkResult gen_benchmark(const SynthConfig& id_cfg, const SynthConfig& ood_cfg,
                              std::size_t n_per_side, const ClassifierHead& head,
                              const BenchmarkOptions& options = {});

}  // namespace rankfeat
