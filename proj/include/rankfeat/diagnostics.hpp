#pragma once

// Random-matrix diagnostics of feature spectra.
//
// The Marchenko-Pastur density used here is, for an MPFit with parameters
// (sigma2, t, n):
//
//   rho(l) = (t/n) sqrt((l+ - l)(l - l-)) / (2 pi l sigma2),  l in [l-, l+]
//   l-/+   = sigma2 (1 -/+ sqrt(n/t))^2
//
// Its continuous mass is min(1, t/n). For eigenvalues of (1/n) X X^T with X of
// shape rows x cols, this is the limiting law when t = cols and n = rows;
// fit_covariance_mp() picks that pairing.

#include <cstddef>
#include <vector>

#include "rankfeat/linalg.hpp"
#include "rankfeat/matrix.hpp"

namespace rankfeat {

struct MPFit {
  double sigma2 = 0.0;
  std::size_t t = 0;
  std::size_t n = 0;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;

  /// Populates the edges from (sigma2, t, n).
  static MPFit make(double sigma2, std::size_t t, std::size_t n);
  double ratio() const { return static_cast<double>(n) / static_cast<double>(t); }
  /// min(1, t/n); the rest sits at zero.
  double continuous_mass() const;
};

struct HistogramKL {
  std::size_t bins = 0;
  double kl = 0.0;
  double epsilon = 0.0;
  double range_hi = 0.0;
  std::vector<double> empirical;  // per-bin mass, after smoothing
  std::vector<double> reference;  // per-bin MP mass, after smoothing
};

/// Eigenvalues of (1/cols) X X^T, nonincreasing; tiny negatives clamp to 0.
/// Length rows (zeros pad when rows > cols).
Spectrum sample_covariance_eigs(const Matrix& x);

double mp_density(double lambda, const MPFit& fit);

/// Integral of mp_density over [a, b] by adaptive Gauss-Kronrod quadrature.
double mp_mass(double a, double b, const MPFit& fit);

/// First-moment fit: sigma2 = mean(eigs).
MPFit fit_mp(const Spectrum& eigs, std::size_t t, std::size_t n);

/// fit_mp for the eigenvalues of (1/cols) X X^T with the (t, n) pairing that
/// matches their limiting law.
MPFit fit_covariance_mp(const Spectrum& eigs, std::size_t rows, std::size_t cols);

/// KL(empirical || MP) over `bins` equal bins on [0, max(l+, max eig)].
/// Numerically zero eigenvalues (the point mass at zero) are left out and the
/// reference is restricted to the continuous part; both sides get `epsilon`
/// added per bin and are renormalized.
HistogramKL kl_to_mp(const Spectrum& eigs, const MPFit& fit, std::size_t bins = 50,
                     double epsilon = 1e-6);

/// sum_{i<k} s_i^2 / sum_j s_j^2.
double explained_variance(const Spectrum& s, std::size_t k);

/// The top_k singular values of X.
Spectrum spectrum_summary(const Matrix& x, std::size_t top_k);

}  // namespace rankfeat
