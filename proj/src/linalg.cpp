#include <limits>
#include <string>

#include "rankfeat/error.hpp"
#include "rankfeat/kernels.hpp"
#include "rankfeat/linalg.hpp"

namespace rankfeat {

Matrix subtract_rank1(const Matrix& x, const SingularTriplet& t) {
  if (t.u.size() != x.rows() || t.v.size() != x.cols()) {
    throw InvalidInputError("subtract_rank1: triplet is " + std::to_string(t.u.size()) +
                            "x" + std::to_string(t.v.size()) + " but matrix is " +
                            std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
  Matrix out = x;
  kernels::active().ger(out.data().data(), out.rows(), out.cols(), -t.s, t.u.data(),
                        t.v.data());
  return out;
}

Matrix subtract_rank_n(const Matrix& x, std::size_t n) {
  if (n < 1 || n > x.min_dim()) {
    throw InvalidInputError("subtract_rank_n: n=" + std::to_string(n) +
                            " outside [1, " + std::to_string(x.min_dim()) + "]");
  }
  const SvdResult dec = svd(x);
  Matrix out = x;
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < n; ++i) {
    const SingularTriplet t = dec.triplet(i);
    k.ger(out.data().data(), out.rows(), out.cols(), -t.s, t.u.data(), t.v.data());
  }
  return out;
}

SingularTriplet dominant_triplet(const Matrix& x, const DominantMethod& method) {
  if (method.kind == DominantMethod::Kind::kExactSvd) return svd(x).triplet(0);
  if (method.iters < 1) throw InvalidInputError("power iteration needs at least 1 iteration");
  PowerIterationOptions options;
  options.max_iters = method.iters;
  // Fixed budget: stop early only once successive estimates stop increasing.
  options.tol = std::numeric_limits<double>::min();
  return power_iteration(x, options).triplet;
}

}  // namespace rankfeat
