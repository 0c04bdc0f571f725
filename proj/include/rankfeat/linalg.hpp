#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rankfeat/matrix.hpp"

namespace rankfeat {

/// Dominant (or i-th) singular value with unit left/right vectors.
///
/// Sign convention: the first entry of `u` whose magnitude exceeds 1e-12 is
/// nonnegative. `u` and `v` are flipped together, so u s v^T is unchanged.
struct SingularTriplet {
  double s = 0.0;
  Vector u;  // length rows
  Vector v;  // length cols
};

/// Flips (u, v) together so that the triplet obeys the sign convention.
void apply_sign_convention(SingularTriplet& t);

/// Nonincreasing, nonnegative values.
class Spectrum {
 public:
  Spectrum() = default;
  /// Throws InvalidInputError if `values` is not nonincreasing and nonnegative.
  explicit Spectrum(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double sum() const;
  double sum_squares() const;

 private:
  std::vector<double> values_;
};

struct SvdResult {
  Matrix u;  // rows x r, orthonormal columns
  Spectrum s;  // length r = min(rows, cols)
  Matrix v;  // cols x r, orthonormal columns

  SingularTriplet triplet(std::size_t i) const;
  /// U diag(S) V^T
  Matrix reconstruct() const;
};

/// Thin SVD by Householder bidiagonalization followed by implicit-shift QR
/// on the bidiagonal. Columns follow the SingularTriplet sign convention.
SvdResult svd(const Matrix& x);

/// Singular values only; skips accumulating U and V.
Spectrum singular_values(const Matrix& x);

enum class StartVector {
  kAllOnes,
  kSeededRandom,
};

struct PowerIterationOptions {
  std::size_t max_iters = 100;
  double tol = 1e-6;
  StartVector start = StartVector::kAllOnes;
  std::uint64_t seed = 0;
  bool record_history = false;
};

struct PowerIterationResult {
  SingularTriplet triplet;
  std::size_t iters_used = 0;
  bool converged = false;
  // Set when the iteration stalled in a way that points at s1 ~= s2. The
  // triplet is still a valid vector of the dominant subspace estimate, but
  // callers that need the exact direction should fall back to svd().
  bool degenerate_warning = false;
  // s estimate after each iteration; filled when record_history is set.
  std::vector<double> history;
};

/// Coupled power iteration for the dominant singular triplet:
///   v_k = X u_k / |X u_k|,  u_{k+1} = X^T v_k / |X^T v_k|,  s = v_k^T X u_k
/// where u runs over the column space (length cols). Stops when the relative
/// change between the two successive estimates |X^T v_k| and |X u_{k+1}|
/// drops below `tol`, or after `max_iters` iterations. The returned triplet
/// is (s, v, u) in the usual (left, right) order.
PowerIterationResult power_iteration(const Matrix& x,
                                     const PowerIterationOptions& options = {});

/// X - s u v^T; X is not modified.
Matrix subtract_rank1(const Matrix& x, const SingularTriplet& t);

/// X - sum_{i<n} s_i u_i v_i^T using the full SVD.
Matrix subtract_rank_n(const Matrix& x, std::size_t n);

/// Leading singular triplet, either exactly (svd) or by power iteration.
struct DominantMethod {
  enum class Kind { kExactSvd, kPowerIteration };
  Kind kind = Kind::kExactSvd;
  std::size_t iters = 0;

  static DominantMethod exact() { return {}; }
  static DominantMethod power(std::size_t iters) {
    return {Kind::kPowerIteration, iters};
  }
};

SingularTriplet dominant_triplet(const Matrix& x, const DominantMethod& method);

}  // namespace rankfeat
