#include "rankfeat/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rankfeat/error.hpp"
#include "rankfeat/parallel.hpp"
#include "rankfeat/stats.hpp"

namespace rankfeat {

double logsumexp(std::span<const double> values) {
  if (values.empty()) throw InvalidInputError("logsumexp of an empty vector");
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) throw InvalidInputError("logsumexp: non-finite input");
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

double energy_score(std::span<const double> logits) { return logsumexp(logits); }

double msp_score(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  return std::exp(top - logsumexp(logits));
}

double odin_score(std::span<const double> logits, const OdinConfig& cfg) {
  if (!(cfg.temperature > 0.0)) throw InvalidInputError("ODIN temperature must be > 0");
  Vector scaled(logits.begin(), logits.end());
  for (double& v : scaled) v /= cfg.temperature;
  return msp_score(scaled);
}

Vector react_transform(const FeatureMatrix& x, const ReActConfig& cfg) {
  if (!(cfg.tau >= 0.0)) throw InvalidInputError("ReAct tau must be >= 0");
  if (!x.post_activation()) {
    throw InvalidInputError("ReAct requires a post-activation (nonnegative) feature");
  }
  Vector pooled = pool(x);
  for (double& v : pooled) v = std::min(v, cfg.tau);
  return pooled;
}

double react_score(const FeatureMatrix& x, const ClassifierHead& head, const ReActConfig& cfg) {
  return energy_score(head_logits(react_transform(x, cfg), head));
}

ReActConfig calibrate_react_tau(std::span<const FeatureMatrix> id_features, double percentile) {
  if (id_features.empty()) throw InvalidInputError("ReAct calibration needs ID features");
  if (!(percentile > 0.0 && percentile <= 100.0)) {
    throw InvalidInputError("ReAct percentile must be in (0, 100]");
  }
  std::vector<double> activations;
  for (const auto& x : id_features) {
    const Vector pooled = pool(x);
    activations.insert(activations.end(), pooled.begin(), pooled.end());
  }
  return ReActConfig{quantile(activations, percentile / 100.0)};
}

ScoredLogits rankfeat_score(const FeatureMatrix& x, const ClassifierHead& head,
                            const DominantMethod& method) {
  if (x.mat().is_zero()) throw DegenerateInputError("RankFeat on a zero feature");
  const SingularTriplet t = dominant_triplet(x.mat(), method);
  const FeatureMatrix residual = x.with_matrix(subtract_rank1(x.mat(), t));
  ScoredLogits out;
  out.logits = forward_head(residual, head);
  out.score = energy_score(out.logits);
  return out;
}

LinearLayer rankweight_prune(const LinearLayer& layer) {
  if (layer.mat().is_zero()) throw DegenerateInputError("RankWeight on a zero layer");
  return LinearLayer(subtract_rank1(layer.mat(), svd(layer.mat()).triplet(0)));
}

ScoredLogits rankweight_score_pruned(const FeatureMatrix& prev, const LinearLayer& pruned,
                                     const ClassifierHead& head) {
  ScoredLogits out;
  out.logits = forward_head(forward_layer(prev, pruned), head);
  out.score = energy_score(out.logits);
  return out;
}

double rankweight_score(const FeatureMatrix& prev, const LinearLayer& layer,
                        const ClassifierHead& head) {
  return rankweight_score_pruned(prev, rankweight_prune(layer), head).score;
}

ScoredLogits rankfeat_rankweight_score(const FeatureMatrix& prev, const LinearLayer& pruned,
                                       const ClassifierHead& head,
                                       const DominantMethod& method) {
  return rankfeat_score(forward_layer(prev, pruned), head, method);
}

double fuse_logits(std::span<const double> y_a, std::span<const double> y_b,
                   FusionStrategy strategy) {
  if (y_a.size() != y_b.size()) {
    throw InvalidInputError("fuse_logits: lengths " + std::to_string(y_a.size()) + " and " +
                            std::to_string(y_b.size()) + " differ");
  }
  if (strategy != FusionStrategy::kMean) {
    throw NotImplementedError("only mean-of-logits fusion is implemented");
  }
  Vector mean(y_a.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = 0.5 * (y_a[i] + y_b[i]);
  return logsumexp(mean);
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kMsp:
      return "msp";
    case Method::kOdin:
      return "odin";
    case Method::kEnergy:
      return "energy";
    case Method::kReact:
      return "react";
    case Method::kRankFeat:
      return "rankfeat";
    case Method::kRankWeight:
      return "rankweight";
    case Method::kRankFeatRankWeight:
      return "rankfeat+rankweight";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::kMsp, Method::kOdin, Method::kEnergy, Method::kReact,
                   Method::kRankFeat, Method::kRankWeight, Method::kRankFeatRankWeight}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

bool produces_logits(Method method) {
  return method != Method::kMsp && method != Method::kOdin;
}

bool needs_layer(Method method) {
  return method == Method::kRankWeight || method == Method::kRankFeatRankWeight;
}

Scorer::Scorer(ClassifierHead head, ScoringConfig config, std::optional<LinearLayer> layer)
    : head_(std::move(head)), config_(config), layer_(std::move(layer)) {
  if (needs_layer(config_.method)) {
    if (!layer_) {
      throw InvalidInputError(std::string(to_string(config_.method)) + " needs a layer");
    }
    pruned_ = rankweight_prune(*layer_);
  }
}

Logits Scorer::logits(const FeatureMatrix& x) const {
  switch (config_.method) {
    case Method::kMsp:
    case Method::kOdin:
    case Method::kEnergy:
      return forward_head(x, head_);
    case Method::kReact:
      return head_logits(react_transform(x, config_.react), head_);
    case Method::kRankFeat:
      return rankfeat_score(x, head_, config_.dominant).logits;
    case Method::kRankWeight:
      return rankweight_score_pruned(x, *pruned_, head_).logits;
    case Method::kRankFeatRankWeight:
      return rankfeat_rankweight_score(x, *pruned_, head_, config_.dominant).logits;
  }
  throw InvalidInputError("unknown scoring method");
}

double Scorer::score(const FeatureMatrix& x) const {
  const Logits y = logits(x);
  switch (config_.method) {
    case Method::kMsp:
      return msp_score(y);
    case Method::kOdin:
      return odin_score(y, config_.odin);
    default:
      return energy_score(y);
  }
}

std::vector<double> Scorer::score_batch(std::span<const FeatureMatrix> xs,
                                        std::size_t jobs) const {
  std::vector<double> out(xs.size());
  parallel_for(xs.size(), jobs, [&](std::size_t i) { out[i] = score(xs[i]); });
  return out;
}

std::vector<Logits> Scorer::logits_batch(std::span<const FeatureMatrix> xs,
                                         std::size_t jobs) const {
  std::vector<Logits> out(xs.size());
  parallel_for(xs.size(), jobs, [&](std::size_t i) { out[i] = logits(xs[i]); });
  return out;
}

}  // namespace rankfeat
