#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "rankfeat/bounds.hpp"
#include "rankfeat/error.hpp"
#include "rankfeat/linalg.hpp"
#include "rankfeat/scoring.hpp"
#include "rankfeat/synth.hpp"

using namespace rankfeat;
using testing::random_matrix;

namespace {

std::vector<double> uniform_logits(std::size_t n, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

FeatureMatrix spiked(std::size_t c, std::size_t h, std::size_t w, double spike, std::uint64_t seed,
                     bool nonneg = false) {
  SynthConfig cfg;
  cfg.channels = c;
  cfg.height = h;
  cfg.width = w;
  cfg.spike = spike;
  cfg.seed = seed;
  cfg.nonnegative = nonneg;
  return gen_feature(cfg);
}

}  // namespace

TEST_CASE("logsumexp") {
  CHECK(logsumexp(std::vector<double>(10, 0.0)) == doctest::Approx(std::log(10.0)).epsilon(1e-15));
  CHECK(logsumexp(std::vector<double>{1000.0, 0.0}) == 1000.0);
  CHECK(logsumexp(std::vector<double>{-1e6, 1e6}) == 1e6);
  CHECK_THROWS_AS(logsumexp(std::vector<double>{}), InvalidInputError);
  CHECK_THROWS_AS(logsumexp(std::vector<double>{std::numeric_limits<double>::quiet_NaN()}),
                  InvalidInputError);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto v = uniform_logits(8, seed, -5.0, 5.0);
    CHECK(std::abs(logsumexp(v) - oracle::logsumexp(v)) <= 1e-12);
  }
}

TEST_CASE("energy score") {
  CHECK(energy_score(std::vector<double>(10, 0.0)) == doctest::Approx(std::log(10.0)));
  std::vector<double> onehot(10, 0.0);
  onehot[0] = 10.0;
  CHECK(energy_score(onehot) == doctest::Approx(10.0 + std::log1p(9.0 * std::exp(-10.0))).epsilon(1e-15));

  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto y = uniform_logits(2 + seed % 20, seed, -5.0, 5.0);
    const double e = energy_score(y);
    const double mx = *std::max_element(y.begin(), y.end());
    CHECK(e > mx);
    CHECK(e < mx + std::log(static_cast<double>(y.size())));
    // Shift equivariance.
    auto shifted = y;
    for (double& x : shifted) x += 3.25;
    CHECK(energy_score(shifted) == doctest::Approx(e + 3.25).epsilon(1e-12));
  }
}

TEST_CASE("msp and odin") {
  CHECK(msp_score(std::vector<double>(4, 0.0)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(std::abs(msp_score(std::vector<double>{20.0, 0.0, 0.0}) - 1.0) <= 1e-8);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto y = uniform_logits(10, seed, -8.0, 8.0);
    CHECK(std::abs(msp_score(y) - oracle::max_softmax(y)) <= 1e-12);
    CHECK(odin_score(y, OdinConfig{1.0}) == msp_score(y));
    auto scaled = y;
    for (double& x : scaled) x /= 1000.0;
    CHECK(std::abs(odin_score(y) - oracle::max_softmax(scaled)) <= 1e-12);
    auto shifted = y;
    for (double& x : shifted) x -= 7.0;
    CHECK(std::abs(msp_score(shifted) - msp_score(y)) < 1e-10);
    CHECK(std::abs(odin_score(shifted) - odin_score(y)) < 1e-10);
  }
  CHECK(odin_score(std::vector<double>(5, 0.0), OdinConfig{3.0}) == doctest::Approx(0.2));
  CHECK_THROWS_AS(odin_score(std::vector<double>{1.0, 2.0}, OdinConfig{0.0}), InvalidInputError);
}

TEST_CASE("react_transform") {
  // Pooled vector [0.1, 0.5, 0.9] from constant rows.
  Matrix m(3, 4);
  const double rows[] = {0.1, 0.5, 0.9};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) m(i, j) = rows[i];
  const FeatureMatrix x(2, 2, m, true);
  const Vector clipped = react_transform(x, ReActConfig{0.5});
  CHECK(clipped[0] == doctest::Approx(0.1));
  CHECK(clipped[1] == doctest::Approx(0.5));
  CHECK(clipped[2] == doctest::Approx(0.5));
  CHECK(react_transform(x, ReActConfig{0.0}) == Vector(3, 0.0));
  CHECK(react_transform(x, ReActConfig{5.0}) == pool(x));
  CHECK(react_transform(x, ReActConfig{}) == pool(x));
  CHECK_THROWS_AS(react_transform(FeatureMatrix(2, 2, m, false), ReActConfig{0.5}), InvalidInputError);
  CHECK_THROWS_AS(react_transform(x, ReActConfig{-1.0}), InvalidInputError);
}

TEST_CASE("calibrate_react_tau") {
  // One feature whose pooled vector is 1..100.
  Matrix m(100, 1);
  for (std::size_t i = 0; i < 100; ++i) m(i, 0) = static_cast<double>(i + 1);
  std::vector<FeatureMatrix> one{FeatureMatrix(1, 1, m, true)};
  std::vector<double> pooled(100);
  std::iota(pooled.begin(), pooled.end(), 1.0);
  CHECK(calibrate_react_tau(one, 90.0).tau == doctest::Approx(oracle::quantile(pooled, 0.9)));
  CHECK(calibrate_react_tau(one, 90.0).tau == doctest::Approx(90.1));
  CHECK(calibrate_react_tau(one, 100.0).tau == 100.0);

  std::vector<FeatureMatrix> flat{FeatureMatrix(2, 2, Matrix(3, 4, 0.7), true),
                                  FeatureMatrix(2, 2, Matrix(3, 4, 0.7), true)};
  CHECK(calibrate_react_tau(flat).tau == doctest::Approx(0.7));
  CHECK_THROWS_AS(calibrate_react_tau(std::vector<FeatureMatrix>{}), InvalidInputError);
  CHECK_THROWS_AS(calibrate_react_tau(one, 0.0), InvalidInputError);
  CHECK_THROWS_AS(calibrate_react_tau(one, 101.0), InvalidInputError);
}

TEST_CASE("rankfeat on a rank-1 feature scores logsumexp(b)") {
  const Vector u{0.6, 0.8, 0.0};
  const Vector v{0.5, 0.5, 0.5, 0.5};
  const FeatureMatrix x(2, 2, Matrix::outer(7.0, u, v));
  const ClassifierHead head(random_matrix(4, 3, 2), Vector{0.1, -0.3, 0.7, 1.2});
  const ScoredLogits r = rankfeat_score(x, head);
  CHECK(r.score == doctest::Approx(logsumexp(head.bias())).epsilon(1e-12));
  CHECK_THROWS_AS(rankfeat_score(FeatureMatrix(Matrix(3, 4)), head), DegenerateInputError);
}

TEST_CASE("rankfeat matches explicit subtraction and leaves X untouched") {
  const FeatureMatrix x(4, 5, random_matrix(6, 20, 13));
  const Matrix before = x.mat();
  const ClassifierHead head(random_matrix(5, 6, 14), oracle::gaussian_vec(5, 15));
  const ScoredLogits r = rankfeat_score(x, head);
  CHECK(x.mat() == before);

  const SvdResult f = svd(x.mat());
  const auto xd = testing::to_dense(x.mat());
  std::vector<double> logits(5);
  for (std::size_t q = 0; q < 5; ++q) {
    long double s = head.bias()[q];
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t p = 0; p < 20; ++p) {
        const double resid = xd(c, p) - f.s[0] * f.u(c, 0) * f.v(p, 0);
        s += (long double)head.weight()(q, c) * resid / 20.0L;
      }
    logits[q] = static_cast<double>(s);
  }
  CHECK(testing::max_abs_diff(r.logits, logits) <= 1e-10);
  CHECK(r.score == doctest::Approx(oracle::logsumexp(logits)).epsilon(1e-12));
}

TEST_CASE("rankfeat: exact vs power iteration(100)") {
  const ClassifierHead head = gen_head(10, 64, 3);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const FeatureMatrix x = spiked(64, 14, 14, 1.5, 1000 + seed);
    const double e = rankfeat_score(x, head).score;
    const double p = rankfeat_score(x, head, DominantMethod::power(100)).score;
    worst = std::max(worst, std::abs(e - p));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("rankfeat respects its closed-form bound") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const FeatureMatrix x(3, 4, random_matrix(8, 12, 20000 + seed, 1.0 + seed % 5));
    const ClassifierHead head(random_matrix(4, 8, 30000 + seed), oracle::gaussian_vec(4, 40000 + seed));
    const BoundReport b = rankfeat_bound(x, head);
    CHECK(b.score == doctest::Approx(rankfeat_score(x, head).score).epsilon(1e-14));
    CHECK(b.slack >= -1e-9);
  }
}

TEST_CASE("rankfeat is invariant to orthogonal conjugation with a rotated head") {
  // X -> Q X P with orthogonal Q (channels) and a spatial permutation P keeps
  // the spectrum; rotating W by Q^T keeps W X' m.
  const std::size_t c = 5, hw = 6;
  const Matrix x = random_matrix(c, hw, 71);
  const Matrix q = svd(random_matrix(c, c, 72)).u;  // orthogonal
  const ClassifierHead head(random_matrix(3, c, 73), oracle::gaussian_vec(3, 74));
  Matrix qx = matmul(q, x);
  // Reverse the spatial positions: m is invariant under permutations.
  Matrix qxp(c, hw);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < hw; ++j) qxp(i, j) = qx(i, hw - 1 - j);
  const ClassifierHead rotated(matmul(head.weight(), q.transposed()), head.bias());
  const double a = rankfeat_score(FeatureMatrix(2, 3, x), head).score;
  const double b = rankfeat_score(FeatureMatrix(2, 3, qxp), rotated).score;
  CHECK(std::abs(a - b) <= 1e-8);
}

TEST_CASE("rankweight_prune") {
  const Vector u{0.0, 1.0};
  const Vector v{0.6, 0.8, 0.0};
  const LinearLayer r1(Matrix::outer(3.0, u, v));
  const LinearLayer z = rankweight_prune(r1);
  for (double e : z.mat().data()) CHECK(std::abs(e) <= 1e-12);

  const LinearLayer d(Matrix::diagonal(std::vector<double>{4.0, 2.0, 1.0}));
  const Matrix p = rankweight_prune(d).mat();
  CHECK(std::abs(p(0, 0)) <= 1e-14);
  CHECK(p(1, 1) == doctest::Approx(2.0));
  CHECK(p(2, 2) == doctest::Approx(1.0));

  const Matrix m = random_matrix(9, 7, 81);
  const Spectrum s = singular_values(m);
  LinearLayer pruned(m);
  for (std::size_t k = 1; k <= 3; ++k) {
    pruned = rankweight_prune(pruned);
    CHECK(std::abs(singular_values(pruned.mat())[0] - s[k]) <= 1e-8);
  }
  CHECK_THROWS_AS(rankweight_prune(LinearLayer(Matrix(3, 3))), DegenerateInputError);
}

TEST_CASE("rankweight with an identity layer removes one unit direction") {
  const std::size_t c = 4;
  const FeatureMatrix prev(2, 3, random_matrix(c, 6, 91));
  const ClassifierHead head(random_matrix(3, c, 92), oracle::gaussian_vec(3, 93));
  const LinearLayer id(Matrix::identity(c));
  const Matrix pruned = rankweight_prune(id).mat();
  // I minus a rank-1 projector e e^T.
  const SingularTriplet t = svd(Matrix::identity(c)).triplet(0);
  Matrix expect = Matrix::identity(c);
  expect -= Matrix::outer(1.0, t.u, t.v);
  CHECK(testing::max_abs_diff(pruned.data(), expect.data()) <= 1e-12);
  const Logits y = head_logits(matvec(matmul(expect, prev.mat()), gap_vector(2, 3)), head);
  CHECK(rankweight_score(prev, id, head) == doctest::Approx(logsumexp(y)).epsilon(1e-12));
}

TEST_CASE("rankweight: zero prev feature and the combined method") {
  const ClassifierHead head(random_matrix(3, 5, 1), Vector{0.2, 0.4, -0.1});
  const LinearLayer layer(random_matrix(5, 4, 2));
  CHECK(rankweight_score(FeatureMatrix(Matrix(4, 6)), layer, head) ==
        doctest::Approx(logsumexp(head.bias())));

  const FeatureMatrix prev(2, 3, random_matrix(4, 6, 3));
  const LinearLayer pruned = rankweight_prune(layer);
  const ScoredLogits both = rankfeat_rankweight_score(prev, pruned, head);
  const ScoredLogits seq = rankfeat_score(forward_layer(prev, pruned), head);
  CHECK(both.score == seq.score);
  CHECK(both.logits == seq.logits);
  CHECK(rankfeat_rankweight_score(prev, pruned, head).score == both.score);
}

TEST_CASE("fuse_logits") {
  const auto a = uniform_logits(7, 1, -4.0, 4.0);
  const auto b = uniform_logits(7, 2, -4.0, 4.0);
  CHECK(fuse_logits(a, a) == doctest::Approx(energy_score(a)).epsilon(1e-15));
  auto neg = a;
  for (double& x : neg) x = -x;
  CHECK(fuse_logits(a, neg) == doctest::Approx(std::log(7.0)).epsilon(1e-15));
  std::vector<double> mid(7);
  for (std::size_t i = 0; i < 7; ++i) mid[i] = 0.5 * (a[i] + b[i]);
  CHECK(std::abs(fuse_logits(a, b) - oracle::logsumexp(mid)) <= 1e-12);
  CHECK_THROWS_AS(fuse_logits(a, std::vector<double>(6, 0.0)), InvalidInputError);
  CHECK_THROWS_AS(fuse_logits(a, b, FusionStrategy::kMax), NotImplementedError);
  CHECK_THROWS_AS(fuse_logits(a, b, FusionStrategy::kMin), NotImplementedError);
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::kMsp, Method::kOdin, Method::kEnergy, Method::kReact, Method::kRankFeat,
                   Method::kRankWeight, Method::kRankFeatRankWeight}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK(parse_method("rankfeat+rankweight") == Method::kRankFeatRankWeight);
  CHECK_FALSE(parse_method("gradnorm").has_value());
}

TEST_CASE("Scorer: batch results follow input order for any job count") {
  const ClassifierHead head = gen_head(6, 16, 5);
  std::vector<FeatureMatrix> xs;
  for (std::uint64_t s = 0; s < 23; ++s) xs.push_back(spiked(16, 3, 4, 1.0 + 0.1 * s, s));
  ScoringConfig cfg;
  cfg.method = Method::kRankFeat;
  const Scorer scorer(head, cfg);
  const auto serial = scorer.score_batch(xs, 1);
  for (std::size_t jobs : {2u, 3u, 8u, 64u}) CHECK(scorer.score_batch(xs, jobs) == serial);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(serial[i] == rankfeat_score(xs[i], head).score);

  ScoringConfig rw;
  rw.method = Method::kRankWeight;
  CHECK_THROWS_AS(Scorer(head, rw), InvalidInputError);
  const LinearLayer layer = gen_layer(16, 16, 2.0, 8);
  const Scorer w(head, rw, layer);
  CHECK(w.score(xs[0]) == doctest::Approx(rankweight_score(xs[0], layer, head)).epsilon(1e-14));
}

TEST_CASE("Scorer covers every method") {
  const ClassifierHead head = gen_head(5, 8, 1);
  const FeatureMatrix x = spiked(8, 2, 3, 2.0, 4, true);
  auto score_with = [&](Method m) {
    ScoringConfig cfg;
    cfg.method = m;
    cfg.react.tau = 0.3;
    return Scorer(head, cfg).score(x);
  };
  const Logits y = forward_head(x, head);
  CHECK(score_with(Method::kMsp) == msp_score(y));
  CHECK(score_with(Method::kOdin) == odin_score(y));
  CHECK(score_with(Method::kEnergy) == energy_score(y));
  CHECK(score_with(Method::kReact) == react_score(x, head, ReActConfig{0.3}));
  CHECK(score_with(Method::kRankFeat) == rankfeat_score(x, head).score);
}
