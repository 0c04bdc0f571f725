#include "rankfeat/synth.hpp"

#include <algorithm>
#include <cmath>

#include "rankfeat/error.hpp"
#include "rankfeat/linalg.hpp"
#include "rankfeat/parallel.hpp"
#include "rankfeat/random.hpp"

namespace rankfeat {
namespace {

Vector unit_gaussian(Rng& rng, std::size_t n) {
  Vector v(n);
  for (double& x : v) x = rng.gaussian();
  const double nrm = norm2(v);
  for (double& x : v) x /= nrm;
  return v;
}

}  // namespace

void SynthConfig::validate() const {
  if (channels == 0 || height == 0 || width == 0) {
    throw InvalidInputError("synth: C, H and W must be positive");
  }
  if (!(spike >= 0.0) || !std::isfinite(spike)) throw InvalidInputError("synth: spike must be >= 0");
  if (!(bulk_scale > 0.0) || !std::isfinite(bulk_scale)) {
    throw InvalidInputError("synth: bulk_scale must be > 0");
  }
  if (spike_direction && spike_direction->size() != channels) {
    throw InvalidInputError("synth: spike direction length must equal C");
  }
}

double bulk_top_singular(std::size_t channels, std::size_t spatial) {
  return std::sqrt(static_cast<double>(channels)) + std::sqrt(static_cast<double>(spatial));
}

FeatureMatrix gen_feature(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.channels;
  const std::size_t hw = cfg.height * cfg.width;
  Rng rng(cfg.seed);
  Vector u = unit_gaussian(rng, c);
  const Vector v = unit_gaussian(rng, hw);
  if (cfg.spike_direction) {
    u = *cfg.spike_direction;
    const double nrm = norm2(u);
    if (!(nrm > 0.0)) throw InvalidInputError("synth: zero spike direction");
    for (double& x : u) x /= nrm;
  }
  Matrix x(c, hw);
  for (double& e : x.data()) e = cfg.bulk_scale * rng.gaussian();
  const double amplitude = cfg.spike * cfg.bulk_scale * bulk_top_singular(c, hw);
  if (amplitude > 0.0) x += Matrix::outer(amplitude, u, v);
  if (cfg.nonnegative) {
    for (double& e : x.data()) e = std::max(e, 0.0);
  }
  return FeatureMatrix(cfg.height, cfg.width, std::move(x), cfg.nonnegative);
}

std::vector<FeatureMatrix> gen_features(const SynthConfig& cfg, std::size_t count,
                                        std::size_t first_index, std::size_t jobs) {
  cfg.validate();
  std::vector<std::optional<FeatureMatrix>> slots(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    SynthConfig local = cfg;
    local.seed = cfg.seed + first_index + i;
    slots[i].emplace(gen_feature(local));
  });
  std::vector<FeatureMatrix> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

ClassifierHead gen_head(std::size_t classes, std::size_t channels, std::uint64_t seed) {
  if (classes < 2) throw InvalidInputError("gen_head: Q must be >= 2");
  if (channels == 0) throw InvalidInputError("gen_head: C must be positive");
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(channels));
  Matrix w(classes, channels);
  for (double& e : w.data()) e = scale * rng.gaussian();
  Vector b(classes);
  for (double& e : b) e = scale * rng.gaussian();
  return ClassifierHead(std::move(w), std::move(b));
}

LinearLayer gen_layer(std::size_t channels, std::size_t prev_channels, double spike,
                      std::uint64_t seed) {
  if (channels == 0 || prev_channels == 0) throw InvalidInputError("gen_layer: empty shape");
  if (!(spike >= 0.0)) throw InvalidInputError("gen_layer: spike must be >= 0");
  Rng rng(seed);
  const Vector u = unit_gaussian(rng, channels);
  const Vector v = unit_gaussian(rng, prev_channels);
  const double scale = 1.0 / std::sqrt(static_cast<double>(prev_channels));
  Matrix m(channels, prev_channels);
  for (double& e : m.data()) e = scale * rng.gaussian();
  const double amplitude = spike * scale * bulk_top_singular(channels, prev_channels);
  if (amplitude > 0.0) m += Matrix::outer(amplitude, u, v);
  return LinearLayer(std::move(m));
}

BenchmarkResult gen_benchmark(const SynthConfig& id_cfg, const SynthConfig& ood_cfg,
                              std::size_t n_per_side, const ClassifierHead& head,
                              const BenchmarkOptions& options) {
  id_cfg.validate();
  ood_cfg.validate();
  if (n_per_side == 0) throw InvalidInputError("gen_benchmark: n_per_side must be positive");
  if (options.methods.empty()) throw InvalidInputError("gen_benchmark: no methods requested");

  SynthConfig ood = ood_cfg;
  std::optional<LinearLayer> layer;
  if (options.pathway) {
    layer = options.pathway->layer;
    if (layer->mat().cols() != id_cfg.channels || layer->mat().cols() != ood_cfg.channels) {
      throw InvalidInputError("gen_benchmark: layer input width must equal the configs' C");
    }
    if (options.pathway->align_ood_spike) ood.spike_direction = svd(layer->mat()).triplet(0).v;
  }

  const auto id_prev = gen_features(id_cfg, n_per_side, 0, options.jobs);
  const auto ood_prev = gen_features(ood, n_per_side, 0, options.jobs);

  // Without a pathway the generated features are the scored features.
  // Methods that do not prune see M X when a pathway exists.
  auto produce = [&](const std::vector<FeatureMatrix>& prev) {
    if (!layer) return prev;
    std::vector<std::optional<FeatureMatrix>> slots(prev.size());
    parallel_for(prev.size(), options.jobs,
                 [&](std::size_t i) { slots[i].emplace(forward_layer(prev[i], *layer)); });
    std::vector<FeatureMatrix> out;
    out.reserve(prev.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
  };
  const auto id_feat = produce(id_prev);
  const auto ood_feat = produce(ood_prev);

  BenchmarkResult result;
  for (std::size_t i = 0; i < n_per_side; ++i) result.seeds_used.push_back(id_cfg.seed + i);
  for (std::size_t i = 0; i < n_per_side; ++i) result.seeds_used.push_back(ood.seed + i);

  for (Method method : options.methods) {
    ScoringConfig cfg;
    cfg.method = method;
    cfg.dominant = options.dominant;
    cfg.odin = options.odin;
    if (method == Method::kReact) {
      if (layer) throw InvalidInputError("gen_benchmark: ReAct with a layer pathway is unsupported");
      const auto calib =
          gen_features(id_cfg, options.react_calibration, n_per_side, options.jobs);
      for (std::size_t i = 0; i < options.react_calibration; ++i) {
        result.seeds_used.push_back(id_cfg.seed + n_per_side + i);
      }
      cfg.react = calibrate_react_tau(calib, options.react_percentile);
      result.react_tau = cfg.react.tau;
    }
    const bool pruned = needs_layer(method);
    if (pruned && !layer) {
      throw InvalidInputError("gen_benchmark: " + std::string(to_string(method)) +
                              " needs a layer pathway");
    }
    const Scorer scorer(head, cfg, pruned ? layer : std::nullopt);
    ScoreSet set;
    set.label = std::string(to_string(method));
    set.id_scores = scorer.score_batch(pruned ? id_prev : id_feat, options.jobs);
    set.ood_scores = scorer.score_batch(pruned ? ood_prev : ood_feat, options.jobs);
    result.reports.push_back(evaluate(set));
    result.score_sets.push_back(std::move(set));
  }
  return result;
}

}  // namespace rankfeat
