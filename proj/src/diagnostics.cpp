#include "rankfeat/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "rankfeat/error.hpp"

namespace rankfeat {
namespace {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
double gauss_kronrod(F&& f, double a, double b, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (std::size_t i = 0; i < 7; ++i) {
    const double dx = h * kKronrodNodes[i];
    const double sum = f(c - dx) + f(c + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  err = std::abs((kronrod - gauss) * h);
  return kronrod * h;
}

template <typename F>
double integrate(F&& f, double a, double b, double tol, int depth = 0) {
  double err = 0.0;
  const double whole = gauss_kronrod(f, a, b, err);
  if (err <= tol || depth >= 30) return whole;
  const double mid = 0.5 * (a + b);
  return integrate(f, a, mid, 0.5 * tol, depth + 1) + integrate(f, mid, b, 0.5 * tol, depth + 1);
}

}  // namespace

MPFit MPFit::make(double sigma2, std::size_t t, std::size_t n) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw InvalidInputError("MP fit needs a positive finite sigma2");
  }
  if (t == 0 || n == 0) throw InvalidInputError("MP fit needs t, n >= 1");
  MPFit fit;
  fit.sigma2 = sigma2;
  fit.t = t;
  fit.n = n;
  const double r = std::sqrt(fit.ratio());
  fit.lambda_minus = sigma2 * (1.0 - r) * (1.0 - r);
  fit.lambda_plus = sigma2 * (1.0 + r) * (1.0 + r);
  return fit;
}

double MPFit::continuous_mass() const {
  return std::min(1.0, static_cast<double>(t) / static_cast<double>(n));
}

Spectrum sample_covariance_eigs(const Matrix& x) {
  const Spectrum s = singular_values(x);
  std::vector<double> eigs(x.rows(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(x.cols());
  for (std::size_t i = 0; i < s.size(); ++i) eigs[i] = std::max(0.0, s[i] * s[i] * inv_n);
  return Spectrum(std::move(eigs));
}

double mp_density(double lambda, const MPFit& fit) {
  if (!(lambda > 0.0) || lambda < fit.lambda_minus || lambda > fit.lambda_plus) return 0.0;
  const double prod = (fit.lambda_plus - lambda) * (lambda - fit.lambda_minus);
  if (prod <= 0.0) return 0.0;
  return (static_cast<double>(fit.t) / static_cast<double>(fit.n)) * std::sqrt(prod) /
         (2.0 * std::numbers::pi * lambda * fit.sigma2);
}

double mp_mass(double a, double b, const MPFit& fit) {
  const double lo = std::max(a, fit.lambda_minus);
  const double hi = std::min(b, fit.lambda_plus);
  if (!(hi > lo)) return 0.0;
  // With l = l- + D (1 - cos th) / 2 the square-root edges and the 1/l pole
  // at l- = 0 cancel against the Jacobian, leaving a smooth integrand.
  const double width = fit.lambda_plus - fit.lambda_minus;
  const double prefactor = static_cast<double>(fit.t) / static_cast<double>(fit.n) /
                           (2.0 * std::numbers::pi * fit.sigma2);
  auto to_theta = [&](double l) {
    return std::acos(std::clamp(1.0 - 2.0 * (l - fit.lambda_minus) / width, -1.0, 1.0));
  };
  auto integrand = [&](double th) {
    const double half = 0.5 * width;
    const double sn = std::sin(th);
    // (1 - cos th) / 2 written as sin^2(th/2) stays accurate near th = 0.
    const double sh = std::sin(0.5 * th);
    const double l = fit.lambda_minus + width * sh * sh;
    if (l <= 0.0) {
      // l- = 0 and th -> 0: sin^2 th / l -> 4 / width.
      return prefactor * half * half * 4.0 / width;
    }
    return prefactor * half * half * sn * sn / l;
  };
  return integrate(integrand, to_theta(lo), to_theta(hi), 1e-13);
}

MPFit fit_mp(const Spectrum& eigs, std::size_t t, std::size_t n) {
  if (eigs.empty()) throw InvalidInputError("fit_mp: no eigenvalues");
  const double sigma2 = eigs.sum() / static_cast<double>(eigs.size());
  if (!(sigma2 > 0.0)) throw DegenerateInputError("fit_mp: all eigenvalues are zero");
  return MPFit::make(sigma2, t, n);
}

MPFit fit_covariance_mp(const Spectrum& eigs, std::size_t rows, std::size_t cols) {
  return fit_mp(eigs, cols, rows);
}

HistogramKL kl_to_mp(const Spectrum& eigs, const MPFit& fit, std::size_t bins, double epsilon) {
  if (bins < 2) throw InvalidInputError("kl_to_mp: need at least 2 bins");
  if (!(epsilon > 0.0)) throw InvalidInputError("kl_to_mp: epsilon must be > 0");
  if (eigs.empty()) throw InvalidInputError("kl_to_mp: no eigenvalues");

  const double top = eigs[0];
  const double hi = std::max(fit.lambda_plus, top);
  const double zero_cut = 1e-10 * top;
  const double width = hi / static_cast<double>(bins);

  HistogramKL out;
  out.bins = bins;
  out.epsilon = epsilon;
  out.range_hi = hi;
  out.empirical.assign(bins, 0.0);
  out.reference.assign(bins, 0.0);

  std::size_t kept = 0;
  for (double l : eigs.values()) {
    if (l <= zero_cut) continue;
    auto idx = static_cast<std::size_t>(l / width);
    out.empirical[std::min(idx, bins - 1)] += 1.0;
    ++kept;
  }
  if (kept == 0) throw DegenerateInputError("kl_to_mp: all eigenvalues are zero");

  const double cont = fit.continuous_mass();
  for (std::size_t i = 0; i < bins; ++i) {
    const double a = width * static_cast<double>(i);
    const double b = i + 1 == bins ? hi : width * static_cast<double>(i + 1);
    out.reference[i] = mp_mass(a, b, fit) / cont;
    out.empirical[i] /= static_cast<double>(kept);
  }

  auto smooth = [&](std::vector<double>& h) {
    double total = 0.0;
    for (double& v : h) {
      v += epsilon;
      total += v;
    }
    for (double& v : h) v /= total;
  };
  smooth(out.empirical);
  smooth(out.reference);

  double kl = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    kl += out.empirical[i] * std::log(out.empirical[i] / out.reference[i]);
  }
  out.kl = std::max(0.0, kl);
  return out;
}

double explained_variance(const Spectrum& s, std::size_t k) {
  if (k < 1 || k > s.size()) {
    throw InvalidInputError("explained_variance: k=" + std::to_string(k) + " outside [1, " +
                            std::to_string(s.size()) + "]");
  }
  const double total = s.sum_squares();
  if (!(total > 0.0)) throw DegenerateInputError("explained_variance: zero spectrum");
  double top = 0.0;
  for (std::size_t i = 0; i < k; ++i) top += s[i] * s[i];
  return std::min(1.0, top / total);
}

Spectrum spectrum_summary(const Matrix& x, std::size_t top_k) {
  if (top_k > x.min_dim()) {
    throw InvalidInputError("spectrum_summary: top_k exceeds the smaller dimension");
  }
  const Spectrum s = singular_values(x);
  return Spectrum(std::vector<double>(s.values().begin(),
                                      s.values().begin() + static_cast<std::ptrdiff_t>(top_k)));
}

}  // namespace rankfeat
