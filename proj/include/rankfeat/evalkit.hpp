#pragma once

// ID-vs-OOD evaluation. Scores are "higher = more in-distribution"; a sample
// is accepted as ID when its score is >= the calibrated threshold gamma.

#include <cstddef>
#include <string>
#include <vector>

namespace rankfeat {

struct ScoreSet {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;
  std::string label;
};

struct EvalReport {
  double fpr95 = 0.0;
  double auroc = 0.0;
  double gamma = 0.0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
};

/// (1 - tpr)-quantile of the ID scores, linearly interpolated.
double calibrate_gamma(const std::vector<double>& id_scores, double tpr);

/// Fraction of OOD scores >= calibrate_gamma(id, tpr).
double fpr_at_tpr(const ScoreSet& s, double tpr);

/// P(id > ood) + P(id == ood)/2 via the rank-sum statistic.
double auroc(const ScoreSet& s);

EvalReport evaluate(const ScoreSet& s, double tpr = 0.95);

}  // namespace rankfeat
