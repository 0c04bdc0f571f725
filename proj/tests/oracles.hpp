#pragma once

// Slow, independent reference implementations used to check the library.
// Nothing here calls into rankfeat.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

struct Dense {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // row-major

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

inline Dense gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Dense d{rows, cols, std::vector<double>(rows * cols)};
  for (double& x : d.a) x = nd(gen);
  return d;
}

inline std::vector<double> gaussian_vec(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  return gaussian(1, n, seed, scale).a;
}

inline Dense matmul(const Dense& x, const Dense& y) {
  Dense z{x.rows, y.cols, std::vector<double>(x.rows * y.cols, 0.0)};
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < y.cols; ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < x.cols; ++k) s += (long double)x(i, k) * y(k, j);
      z(i, j) = static_cast<double>(s);
    }
  return z;
}

inline Dense transpose(const Dense& x) {
  Dense t{x.cols, x.rows, std::vector<double>(x.a.size())};
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) t(j, i) = x(i, j);
  return t;
}

inline std::vector<double> matvec(const Dense& x, const std::vector<double>& v) {
  std::vector<double> out(x.rows, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    long double s = 0;
    for (std::size_t j = 0; j < x.cols; ++j) s += (long double)x(i, j) * v[j];
    out[i] = static_cast<double>(s);
  }
  return out;
}

inline double frobenius(const Dense& x) {
  long double s = 0;
  for (double v : x.a) s += (long double)v * v;
  return std::sqrt(static_cast<double>(s));
}

// Cyclic Jacobi on a symmetric matrix. Returns eigenvalues, descending.
inline std::vector<double> jacobi_eigenvalues(Dense s) {
  const std::size_t n = s.rows;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(s(p, q)) < 1e-300) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = s(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// Singular values from the eigenvalues of the smaller Gram matrix.
inline std::vector<double> singular_values(const Dense& x) {
  const Dense g = x.rows <= x.cols ? matmul(x, transpose(x)) : matmul(transpose(x), x);
  std::vector<double> ev = jacobi_eigenvalues(g);
  for (double& e : ev) e = std::sqrt(std::max(e, 0.0));
  return ev;
}

inline double logsumexp(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += std::exp((long double)x);
  return static_cast<double>(std::log(s));
}

inline double max_softmax(const std::vector<double>& v) {
  long double s = 0, best = 0;
  for (double x : v) s += std::exp((long double)x);
  for (double x : v) best = std::max(best, std::exp((long double)x) / s);
  return static_cast<double>(best);
}

// Sort, then interpolate between neighbouring order statistics.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Fraction of (id, ood) pairs ranked correctly, ties counting one half.
inline double auroc_pairs(const std::vector<double>& id, const std::vector<double>& ood) {
  double wins = 0.0;
  for (double a : id)
    for (double b : ood) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

// Sweeps every candidate threshold; returns the FPR at the first threshold
// (scanning from high to low) whose TPR reaches `tpr`, using the same
// interpolated-quantile threshold definition as a tie-break reference.
inline double fpr_sweep(const std::vector<double>& id, const std::vector<double>& ood, double tpr) {
  const double gamma = quantile(id, 1.0 - tpr);
  std::size_t hits = 0;
  for (double b : ood) hits += b >= gamma ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ood.size());
}

inline double simpson(const std::function<double(double)>& f, double a, double b, double tol,
                      int depth = 50) {
  const std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int d) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
          return left + right + (left + right - whole) / 15.0;
        }
        return rec(lo, mid, flo, flm, fmid, left, d - 1) + rec(mid, hi, fmid, frm, fhi, right, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), depth);
}

struct MarchenkoPastur {
  double sigma2;
  double t;
  double n;
  double lo() const { return sigma2 * std::pow(1.0 - std::sqrt(n / t), 2); }
  double hi() const { return sigma2 * std::pow(1.0 + std::sqrt(n / t), 2); }
  double density(double l) const {
    if (l <= 0.0 || l < lo() || l > hi()) return 0.0;
    return (t / n) * std::sqrt(std::max((hi() - l) * (l - lo()), 0.0)) /
           (2.0 * std::numbers::pi * l * sigma2);
  }
  // Integral of sqrt((b - x)(x - a)) / x over [a, b] is (pi / 2)(sqrt b - sqrt a)^2.
  double total_mass() const {
    const double d = std::sqrt(hi()) - std::sqrt(lo());
    return (t / n) / (2.0 * std::numbers::pi * sigma2) * (std::numbers::pi / 2.0) * d * d;
  }
  // Inverse-CDF draw from the continuous part, by bisection on Simpson CDFs.
  double sample(double uniform) const {
    const double target = uniform * total_mass();
    double a = lo(), b = hi();
    for (int i = 0; i < 60; ++i) {
      const double m = 0.5 * (a + b);
      const double c = simpson([this](double l) { return density(l); }, lo(), m, 1e-12, 30);
      (c < target ? a : b) = m;
    }
    return 0.5 * (a + b);
  }
};

}  // namespace oracle
