#pragma once

// Post-hoc OOD scores. Higher always means "more in-distribution".

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankfeat/linalg.hpp"
#include "rankfeat/pipeline.hpp"

namespace rankfeat {

/// max(v) + log sum exp(v_i - max(v)).
double logsumexp(std::span<const double> values);

double energy_score(std::span<const double> logits);

/// Largest softmax probability.
double msp_score(std::span<const double> logits);

struct OdinConfig {
  double temperature = 1000.0;
};

/// MSP of logits / T, without input perturbation.
double odin_score(std::span<const double> logits, const OdinConfig& cfg = {});

struct ReActConfig {
  double tau = std::numeric_limits<double>::infinity();
};

/// min(X m, tau) elementwise. Requires a post-activation feature.
Vector react_transform(const FeatureMatrix& x, const ReActConfig& cfg);

/// Energy of W min(X m, tau) + b.
double react_score(const FeatureMatrix& x, const ClassifierHead& head,
                   const ReActConfig& cfg);

/// tau = `percentile` of every pooled activation across the ID features,
/// linearly interpolated.
ReActConfig calibrate_react_tau(std::span<const FeatureMatrix> id_features,
                                double percentile = 90.0);

struct ScoredLogits {
  double score = 0.0;
  Logits logits;
};

/// Energy of the head applied to X - s1 u1 v1^T.
ScoredLogits rankfeat_score(const FeatureMatrix& x, const ClassifierHead& head,
                            const DominantMethod& method = DominantMethod::exact());

/// M - s1 u1 v1^T. Compute once per layer and reuse for every sample.
LinearLayer rankweight_prune(const LinearLayer& layer);

/// Energy of head(forward_layer(prev, prune(layer))).
double rankweight_score(const FeatureMatrix& prev, const LinearLayer& layer,
                        const ClassifierHead& head);

/// Same as rankweight_score, for a layer already passed through rankweight_prune.
ScoredLogits rankweight_score_pruned(const FeatureMatrix& prev, const LinearLayer& pruned,
                                     const ClassifierHead& head);

/// Rank-1 removal from both the layer (pre-pruned) and the produced feature.
ScoredLogits rankfeat_rankweight_score(const FeatureMatrix& prev, const LinearLayer& pruned,
                                       const ClassifierHead& head,
                                       const DominantMethod& method = DominantMethod::exact());

enum class FusionStrategy {
  kMean,
  kMax,
  kMin,
};

/// logsumexp((y_a + y_b) / 2). Only the mean strategy is implemented.
double fuse_logits(std::span<const double> y_a, std::span<const double> y_b,
                   FusionStrategy strategy = FusionStrategy::kMean);

enum class Method {
  kMsp,
  kOdin,
  kEnergy,
  kReact,
  kRankFeat,
  kRankWeight,
  kRankFeatRankWeight,
};

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view name);
/// Methods whose score is the energy of a logit vector (and can be fused).
bool produces_logits(Method method);
bool needs_layer(Method method);

struct ScoringConfig {
  Method method = Method::kEnergy;
  DominantMethod dominant = DominantMethod::exact();
  OdinConfig odin;
  ReActConfig react;
};

/// Binds a head (and optionally a layer) to a method. The layer is pruned
/// once at construction for the RankWeight variants.
class Scorer {
 public:
  Scorer(ClassifierHead head, ScoringConfig config,
         std::optional<LinearLayer> layer = std::nullopt);

  double score(const FeatureMatrix& x) const;
  /// Logits the score is computed from (raw head logits for MSP and ODIN).
  Logits logits(const FeatureMatrix& x) const;

  std::vector<double> score_batch(std::span<const FeatureMatrix> xs, std::size_t jobs = 1) const;
  std::vector<Logits> logits_batch(std::span<const FeatureMatrix> xs, std::size_t jobs = 1) const;

  const ScoringConfig& config() const noexcept { return config_; }
  const ClassifierHead& head() const noexcept { return head_; }
  const std::optional<LinearLayer>& pruned_layer() const noexcept { return pruned_; }

 private:
  ClassifierHead head_;
  ScoringConfig config_;
  std::optional<LinearLayer> layer_;
  std::optional<LinearLayer> pruned_;
};

}  // namespace rankfeat
