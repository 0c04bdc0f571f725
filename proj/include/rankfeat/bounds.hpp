#pragma once

// Closed-form upper bounds on energy-family scores, reported next to the
// score they bound. All norms are infinity norms: max absolute row sum for
// W, max absolute entry for b.

#include <map>
#include <string>

#include "rankfeat/pipeline.hpp"
#include "rankfeat/scoring.hpp"

namespace rankfeat {

struct BoundReport {
  double bound = 0.0;
  double score = 0.0;
  double slack = 0.0;  // bound - score
  // Named terms: spectral_sum, s1_term, weight_inf_norm, bias_inf_norm, logQ,
  // and tighten_ratio where it applies.
  std::map<std::string, double> components;
};

/// (sum_i s_i - s1) |W|/HW + |b| + log Q, against the exact-SVD RankFeat score.
BoundReport rankfeat_bound(const FeatureMatrix& x, const ClassifierHead& head);

/// sum_i s_i |W|/HW + |b| + log Q, against the plain energy score.
BoundReport energy_bound(const FeatureMatrix& x, const ClassifierHead& head);

/// energy_bound minus max(s1/sqrt(C HW) - tau, 0) |W|/HW, against the ReAct score.
BoundReport react_bound(const FeatureMatrix& x, const ClassifierHead& head,
                        const ReActConfig& cfg);

/// s2/s1 of the layer matrix.
double rankweight_tighten(const LinearLayer& layer);

/// Energy-style bound of the layer pathway, s1(M) sum_i s_i(X_prev) |W|/HW + C,
/// scaled by s2(M)/s1(M); reported against the RankWeight score.
BoundReport rankweight_bound(const FeatureMatrix& prev, const LinearLayer& layer,
                             const ClassifierHead& head);

}  // namespace rankfeat
