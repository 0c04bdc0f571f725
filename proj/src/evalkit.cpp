#include "rankfeat/evalkit.hpp"

#include <algorithm>
#include <cmath>

#include "rankfeat/error.hpp"
#include "rankfeat/stats.hpp"

namespace rankfeat {
namespace {

void validate(const ScoreSet& s) {
  if (s.id_scores.empty() || s.ood_scores.empty()) {
    throw InvalidInputError("score set '" + s.label + "' needs ID and OOD scores");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(s.id_scores.begin(), s.id_scores.end(), finite) ||
      !std::all_of(s.ood_scores.begin(), s.ood_scores.end(), finite)) {
    throw InvalidInputError("score set '" + s.label + "' has non-finite scores");
  }
}

}  // namespace

double calibrate_gamma(const std::vector<double>& id_scores, double tpr) {
  if (id_scores.empty()) throw InvalidInputError("calibrate_gamma: no ID scores");
  if (!(tpr > 0.0 && tpr < 1.0)) throw InvalidInputError("calibrate_gamma: tpr must be in (0, 1)");
  for (double v : id_scores) {
    if (!std::isfinite(v)) throw InvalidInputError("calibrate_gamma: non-finite ID score");
  }
  return quantile(id_scores, 1.0 - tpr);
}

double fpr_at_tpr(const ScoreSet& s, double tpr) {
  validate(s);
  const double gamma = calibrate_gamma(s.id_scores, tpr);
  const auto accepted = std::count_if(s.ood_scores.begin(), s.ood_scores.end(),
                                      [gamma](double v) { return v >= gamma; });
  return static_cast<double>(accepted) / static_cast<double>(s.ood_scores.size());
}

double auroc(const ScoreSet& s) {
  validate(s);
  struct Entry {
    double score;
    bool is_id;
  };
  std::vector<Entry> all;
  all.reserve(s.id_scores.size() + s.ood_scores.size());
  for (double v : s.id_scores) all.push_back({v, true});
  for (double v : s.ood_scores) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Sum of (1-based, tie-averaged) ranks of the ID scores.
  double id_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    std::size_t ids = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      ids += all[j].is_id ? 1 : 0;
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    id_rank_sum += avg_rank * static_cast<double>(ids);
    i = j;
  }
  const auto n_id = static_cast<double>(s.id_scores.size());
  const auto n_ood = static_cast<double>(s.ood_scores.size());
  const double u = id_rank_sum - n_id * (n_id + 1.0) / 2.0;
  return u / (n_id * n_ood);
}

EvalReport evaluate(const ScoreSet& s, double tpr) {
  validate(s);
  EvalReport r;
  r.gamma = calibrate_gamma(s.id_scores, tpr);
  r.fpr95 = fpr_at_tpr(s, tpr);
  r.auroc = auroc(s);
  r.n_id = s.id_scores.size();
  r.n_ood = s.ood_scores.size();
  return r;
}

}  // namespace rankfeat
