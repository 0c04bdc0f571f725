#include "rankfeat/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "rankfeat/error.hpp"
#include "rankfeat/linalg.hpp"

namespace rankfeat {
namespace {

struct Terms {
  double spectral_sum;
  double s1;
  double weight_norm;
  double bias_norm;
  double log_q;
  double hw;
};

Terms common_terms(const FeatureMatrix& x, const ClassifierHead& head) {
  if (head.channels() != x.channels()) {
    throw InvalidInputError("bound: head expects " + std::to_string(head.channels()) +
                            " channels, feature has " + std::to_string(x.channels()));
  }
  const Spectrum s = singular_values(x.mat());
  return Terms{s.sum(),
               s[0],
               inf_norm(head.weight()),
               inf_norm(head.bias()),
               std::log(static_cast<double>(head.classes())),
               static_cast<double>(x.spatial())};
}

BoundReport finish(double bound, double score, const Terms& t) {
  BoundReport r;
  r.bound = bound;
  r.score = score;
  r.slack = bound - score;
  r.components = {{"spectral_sum", t.spectral_sum},
                  {"s1_term", t.s1 * t.weight_norm / t.hw},
                  {"weight_inf_norm", t.weight_norm},
                  {"bias_inf_norm", t.bias_norm},
                  {"logQ", t.log_q}};
  return r;
}

}  // namespace

BoundReport energy_bound(const FeatureMatrix& x, const ClassifierHead& head) {
  const Terms t = common_terms(x, head);
  const double bound = t.spectral_sum * t.weight_norm / t.hw + t.bias_norm + t.log_q;
  return finish(bound, energy_score(forward_head(x, head)), t);
}

BoundReport rankfeat_bound(const FeatureMatrix& x, const ClassifierHead& head) {
  const Terms t = common_terms(x, head);
  const double bound = t.spectral_sum * t.weight_norm / t.hw -
                       t.s1 * t.weight_norm / t.hw + t.bias_norm + t.log_q;
  double score;
  if (x.mat().is_zero()) {
    // Nothing to remove; the head sees only its bias.
    score = energy_score(head.bias());
  } else {
    score = rankfeat_score(x, head).score;
  }
  return finish(bound, score, t);
}

BoundReport react_bound(const FeatureMatrix& x, const ClassifierHead& head,
                        const ReActConfig& cfg) {
  const Terms t = common_terms(x, head);
  const double chw = static_cast<double>(x.channels()) * t.hw;
  const double clip = std::max(t.s1 / std::sqrt(chw) - cfg.tau, 0.0);
  const double bound = t.spectral_sum * t.weight_norm / t.hw - clip * t.weight_norm / t.hw +
                       t.bias_norm + t.log_q;
  BoundReport r = finish(bound, react_score(x, head, cfg), t);
  r.components["clip_term"] = clip * t.weight_norm / t.hw;
  return r;
}

double rankweight_tighten(const LinearLayer& layer) {
  const Spectrum s = singular_values(layer.mat());
  if (!(s[0] > 0.0)) throw DegenerateInputError("rankweight_tighten: zero layer");
  if (s.size() < 2) return 0.0;
  return s[1] / s[0];
}

BoundReport rankweight_bound(const FeatureMatrix& prev, const LinearLayer& layer,
                             const ClassifierHead& head) {
  const Spectrum layer_s = singular_values(layer.mat());
  if (!(layer_s[0] > 0.0)) throw DegenerateInputError("rankweight_bound: zero layer");
  const double ratio = layer_s.size() < 2 ? 0.0 : layer_s[1] / layer_s[0];
  const FeatureMatrix produced = forward_layer(prev, layer);
  const Terms t = common_terms(produced, head);
  const double prev_sum = singular_values(prev.mat()).sum();
  const double pathway = layer_s[0] * prev_sum * t.weight_norm / t.hw;
  const double bound = ratio * pathway + t.bias_norm + t.log_q;

  BoundReport r = finish(bound, rankweight_score(prev, layer, head), t);
  r.components["tighten_ratio"] = ratio;
  r.components["pathway_energy_bound"] = pathway + t.bias_norm + t.log_q;
  return r;
}

}  // namespace rankfeat
