#include <cmath>
#include <deque>

#include "rankfeat/error.hpp"
#include "rankfeat/kernels.hpp"
#include "rankfeat/linalg.hpp"
#include "rankfeat/random.hpp"

namespace rankfeat {
namespace {

constexpr std::size_t kStallWindow = 10;
constexpr double kGapThreshold = 1e-6;

Vector start_vector(const Matrix& x, const PowerIterationOptions& options) {
  const std::size_t n = x.cols();
  Vector a(n, 1.0);
  if (options.start == StartVector::kSeededRandom) {
    Rng rng(options.seed);
    for (double& v : a) v = rng.gaussian();
  }
  const double norm = norm2(a);
  for (double& v : a) v /= norm;
  return a;
}

// Row of X with the largest norm, normalized. Used when the configured start
// is orthogonal to the row space of X.
Vector fallback_start(const Matrix& x) {
  std::size_t best = 0;
  double best_norm = -1.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double nrm = norm2(x.row(i));
    if (nrm > best_norm) {
      best_norm = nrm;
      best = i;
    }
  }
  Vector a(x.row(best).begin(), x.row(best).end());
  for (double& v : a) v /= best_norm;
  return a;
}

// The error in s shrinks by (s2/s1)^4 per full iteration, and so do the
// changes between iterations. A window that stops shrinking, or whose
// contraction rate implies 1 - s2/s1 below kGapThreshold, flags a
// (near-)repeated dominant singular value.
bool looks_degenerate(const std::deque<double>& changes) {
  if (changes.size() < kStallWindow) return false;
  for (std::size_t i = 1; i < changes.size(); ++i) {
    if (changes[i] > changes[i - 1]) return true;
  }
  const double first = changes.front();
  const double last = changes.back();
  if (first <= 0.0 || last <= 0.0) return false;
  const double rate =
      std::pow(last / first, 1.0 / static_cast<double>(changes.size() - 1));
  const double gap = 1.0 - std::pow(std::min(rate, 1.0), 0.25);
  return gap < kGapThreshold;
}

}  // namespace

PowerIterationResult power_iteration(const Matrix& x, const PowerIterationOptions& options) {
  if (options.max_iters < 1) throw InvalidInputError("power_iteration: max_iters must be >= 1");
  if (!(options.tol > 0.0)) throw InvalidInputError("power_iteration: tol must be > 0");
  if (!x.all_finite()) throw InvalidInputError("power_iteration: non-finite input");
  if (x.is_zero()) throw DegenerateInputError("power_iteration: zero matrix");

  const auto& k = kernels::active();
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  const double* xd = x.data().data();

  Vector a = start_vector(x, options);  // right vector, length cols
  Vector b(rows);                        // left vector, length rows
  k.gemv(xd, rows, cols, a.data(), b.data());
  double s = std::sqrt(k.dot(b.data(), b.data(), rows));
  if (s == 0.0) {
    a = fallback_start(x);
    k.gemv(xd, rows, cols, a.data(), b.data());
    s = std::sqrt(k.dot(b.data(), b.data(), rows));
  }
  k.scal(1.0 / s, b.data(), rows);

  PowerIterationResult result;
  std::deque<double> changes;
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    k.gemv_t(xd, rows, cols, b.data(), a.data());
    const double at_norm = std::sqrt(k.dot(a.data(), a.data(), cols));
    k.scal(1.0 / at_norm, a.data(), cols);

    k.gemv(xd, rows, cols, a.data(), b.data());
    const double s_next = std::sqrt(k.dot(b.data(), b.data(), rows));
    k.scal(1.0 / s_next, b.data(), rows);

    // s <= |X^T b| <= |X a| holds at every step, so the half-step gap is the
    // latest relative change; it is zero after one step on rank-1 input.
    const double half_change = (s_next - at_norm) / s_next;
    const double change = std::abs(s_next - s) / s_next;
    s = s_next;
    result.iters_used = it;
    if (options.record_history) result.history.push_back(s);
    if (half_change < options.tol) {
      result.converged = true;
      break;
    }
    changes.push_back(change);
    if (changes.size() > kStallWindow) changes.pop_front();
  }
  if (!result.converged) result.degenerate_warning = looks_degenerate(changes);

  result.triplet.s = s;
  result.triplet.u = std::move(b);
  result.triplet.v = std::move(a);
  apply_sign_convention(result.triplet);
  return result;
}

}  // namespace rankfeat
