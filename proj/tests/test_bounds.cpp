#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "rankfeat/bounds.hpp"
#include "rankfeat/error.hpp"
#include "rankfeat/linalg.hpp"
#include "rankfeat/synth.hpp"

using namespace rankfeat;
using testing::random_matrix;

namespace {

// Independent norms: max absolute row sum and max absolute entry.
double row_sum_norm(const oracle::Dense& w) {
  double best = 0.0;
  for (std::size_t i = 0; i < w.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) s += std::abs(w(i, j));
    best = std::max(best, s);
  }
  return best;
}

double max_abs(const std::vector<double>& b) {
  double m = 0.0;
  for (double x : b) m = std::max(m, std::abs(x));
  return m;
}

FeatureMatrix nonneg_feature(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.channels = c;
  cfg.height = h;
  cfg.width = w;
  cfg.spike = static_cast<double>(seed % 4);
  cfg.seed = seed;
  cfg.nonnegative = true;
  return gen_feature(cfg);
}

}  // namespace

TEST_CASE("bounds on a zero feature") {
  const auto wd = oracle::gaussian(4, 6, 1);
  const std::vector<double> b{0.3, -1.7, 0.2, 0.9};
  const ClassifierHead head(testing::to_matrix(wd), b);
  const FeatureMatrix zero(2, 3, Matrix(6, 6));
  const double constant = 1.7 + std::log(4.0);

  const BoundReport e = energy_bound(zero, head);
  CHECK(e.bound == doctest::Approx(constant).epsilon(1e-15));
  CHECK(e.score == doctest::Approx(oracle::logsumexp(b)));

  const BoundReport r = rankfeat_bound(zero, head);
  CHECK(r.bound == doctest::Approx(constant).epsilon(1e-15));
  CHECK(r.score == doctest::Approx(oracle::logsumexp(b)));
  CHECK(r.slack >= 0.0);
  CHECK(r.components.at("weight_inf_norm") == doctest::Approx(row_sum_norm(wd)));
  CHECK(r.components.at("bias_inf_norm") == 1.7);
  CHECK(r.components.at("logQ") == doctest::Approx(std::log(4.0)));
}

TEST_CASE("rankfeat bound of a rank-1 feature is the constant term") {
  const Vector u{0.0, 0.6, 0.8};
  const Vector v{0.5, -0.5, 0.5, -0.5};
  const FeatureMatrix x(2, 2, Matrix::outer(9.0, u, v));
  const std::vector<double> b{1.0, -0.5};
  const ClassifierHead head(random_matrix(2, 3, 5), b);
  const BoundReport r = rankfeat_bound(x, head);
  CHECK(r.bound == doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-12));
  CHECK(r.slack >= -1e-9);
}

TEST_CASE("energy minus rankfeat bound is s1 |W| / HW") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto xd = oracle::gaussian(7, 12, 100 + seed);
    const auto wd = oracle::gaussian(5, 7, 200 + seed);
    const ClassifierHead head(testing::to_matrix(wd), oracle::gaussian_vec(5, 300 + seed));
    const FeatureMatrix x(3, 4, testing::to_matrix(xd));
    const double s1 = oracle::singular_values(xd)[0];
    const double gap = energy_bound(x, head).bound - rankfeat_bound(x, head).bound;
    CHECK(std::abs(gap - s1 * row_sum_norm(wd) / 12.0) <= 1e-10);
  }
}

TEST_CASE("random pairs never violate the energy and rankfeat bounds") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const std::size_t c = 2 + seed % 9, h = 1 + seed % 3, w = 1 + seed % 5;
    const FeatureMatrix x(h, w, random_matrix(c, h * w, seed, 0.1 + seed % 7));
    const ClassifierHead head(random_matrix(2 + seed % 6, c, seed + 1), oracle::gaussian_vec(2 + seed % 6, seed + 2));
    CHECK(energy_bound(x, head).slack >= -1e-9);
    CHECK(rankfeat_bound(x, head).slack >= -1e-9);
  }
}

TEST_CASE("react bound") {
  const ClassifierHead head = gen_head(6, 8, 11);
  const FeatureMatrix x = nonneg_feature(8, 3, 3, 7);
  const double s1 = singular_values(x.mat())[0];

  // Large tau: the clip term vanishes.
  const BoundReport loose = react_bound(x, head, ReActConfig{s1 / std::sqrt(72.0) + 1.0});
  CHECK(loose.bound == doctest::Approx(energy_bound(x, head).bound).epsilon(1e-15));
  CHECK(loose.components.at("clip_term") == 0.0);

  const BoundReport zero = react_bound(x, head, ReActConfig{0.0});
  CHECK(zero.score == doctest::Approx(logsumexp(head.bias())).epsilon(1e-14));
  CHECK(zero.slack >= 0.0);

  Matrix neg = x.mat();
  neg(0, 0) = -1.0;
  CHECK_THROWS_AS(react_bound(FeatureMatrix(3, 3, neg), head, ReActConfig{1.0}), InvalidInputError);

  std::vector<FeatureMatrix> calib;
  for (std::uint64_t s = 0; s < 50; ++s) calib.push_back(nonneg_feature(8, 3, 3, 5000 + s));
  const ReActConfig cfg = calibrate_react_tau(calib);
  for (std::uint64_t s = 0; s < 300; ++s) {
    CHECK(react_bound(nonneg_feature(8, 3, 3, s), head, cfg).slack >= -1e-9);
  }
}

TEST_CASE("bound monotonicity in s1") {
  // Fixed residual and head; only the planted component's strength changes.
  const Matrix base = random_matrix(6, 10, 3);
  const SvdResult f = svd(base);
  const Matrix residual = subtract_rank1(base, f.triplet(0));
  const ClassifierHead head(random_matrix(4, 6, 4), oracle::gaussian_vec(4, 5));
  const double w = row_sum_norm(testing::to_dense(head.weight()));
  std::vector<double> gaps, rf;
  for (double s1 : {f.s[0], 2.0 * f.s[0], 5.0 * f.s[0], 10.0 * f.s[0]}) {
    Matrix x = residual;
    x += Matrix::outer(s1, f.triplet(0).u, f.triplet(0).v);
    const FeatureMatrix fx(2, 5, x);
    const double gap = energy_bound(fx, head).bound - rankfeat_bound(fx, head).bound;
    CHECK(gap == doctest::Approx(s1 * w / 10.0).epsilon(1e-10));
    gaps.push_back(gap);
    rf.push_back(rankfeat_bound(fx, head).bound);
  }
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    CHECK(gaps[i] > gaps[i - 1]);
    CHECK(rf[i] == doctest::Approx(rf[0]).epsilon(1e-10));
  }
}

TEST_CASE("rankweight_tighten") {
  const Vector u{0.6, 0.8};
  const Vector v{1.0, 0.0, 0.0};
  CHECK(rankweight_tighten(LinearLayer(Matrix::outer(4.0, u, v))) <= 1e-15);
  Matrix ci = Matrix::identity(5);
  ci *= 3.0;
  CHECK(rankweight_tighten(LinearLayer(ci)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rankweight_tighten(LinearLayer(Matrix(1, 4, 2.0))) == 0.0);
  CHECK_THROWS_AS(rankweight_tighten(LinearLayer(Matrix(3, 3))), DegenerateInputError);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto md = oracle::gaussian(8 + seed % 5, 6 + seed % 7, 900 + seed);
    const auto s = oracle::singular_values(md);
    const double ratio = rankweight_tighten(LinearLayer(testing::to_matrix(md)));
    CHECK(ratio >= 0.0);
    CHECK(ratio <= 1.0);
    CHECK(std::abs(ratio - s[1] / s[0]) <= 1e-10);
    CHECK(std::abs(ratio * s[0] - s[1]) <= 1e-10 * s[0]);
  }
}

TEST_CASE("rankweight bound") {
  const ClassifierHead head = gen_head(5, 12, 1);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const LinearLayer layer = gen_layer(12, 9, static_cast<double>(seed % 4), seed);
    const FeatureMatrix prev(2, 4, random_matrix(9, 8, 7000 + seed));
    const BoundReport r = rankweight_bound(prev, layer, head);
    CHECK(r.score == doctest::Approx(rankweight_score(prev, layer, head)).epsilon(1e-14));
    CHECK(r.slack >= -1e-9);
    CHECK(r.components.at("tighten_ratio") == doctest::Approx(rankweight_tighten(layer)).epsilon(1e-14));
    CHECK(r.bound <= r.components.at("pathway_energy_bound") + 1e-12);
  }
}
