// Golub-Kahan-Reinsch SVD.
//
// The matrix is brought to the m >= n orientation, reduced to upper
// bidiagonal form by alternating Householder reflections, and the bidiagonal
// is diagonalized by implicitly shifted QR sweeps. U and V are kept
// transposed (one singular vector per contiguous row) so that every Givens
// rotation is a unit-stride `rot` kernel call.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rankfeat/error.hpp"
#include "rankfeat/kernels.hpp"
#include "rankfeat/linalg.hpp"

namespace rankfeat {
namespace {

constexpr int kMaxSweepsPerValue = 75;

struct Reflector {
  std::vector<double> v;
  double tau = 0.0;
};

// Builds H = I - tau v v^T with H x = alpha e0. Returns alpha.
double make_reflector(std::span<const double> x, Reflector& out,
                      const kernels::KernelTable& k) {
  out.v.assign(x.begin(), x.end());
  const double norm = std::sqrt(k.dot(x.data(), x.data(), x.size()));
  if (norm == 0.0) {
    out.tau = 0.0;
    return 0.0;
  }
  const double x0 = x[0];
  const double alpha = x0 >= 0.0 ? -norm : norm;
  out.v[0] = x0 - alpha;
  out.tau = 1.0 / (norm * (norm + std::abs(x0)));
  return alpha;
}

struct Bidiagonal {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<double> d;   // diagonal, length n
  std::vector<double> e;   // e[i] couples d[i-1] and d[i]; e[0] == 0
  std::vector<double> ut;  // n x m, row j = column j of U
  std::vector<double> vt;  // n x n, row j = column j of V
};

Bidiagonal bidiagonalize(std::vector<double> a, std::size_t m, std::size_t n,
                         bool want_vectors, const kernels::KernelTable& k) {
  Bidiagonal bd;
  bd.m = m;
  bd.n = n;
  bd.d.assign(n, 0.0);
  bd.e.assign(n, 0.0);

  std::vector<Reflector> left(n);
  std::vector<Reflector> right(n > 1 ? n - 1 : 0);
  std::vector<double> column(m);
  std::vector<double> w(n);

  for (std::size_t c = 0; c < n; ++c) {
    // Left reflector zeroes A[c+1:m, c].
    const std::size_t len = m - c;
    for (std::size_t i = 0; i < len; ++i) column[i] = a[(c + i) * n + c];
    Reflector& h = left[c];
    bd.d[c] = make_reflector({column.data(), len}, h, k);
    const std::size_t tail = n - c - 1;
    if (h.tau != 0.0 && tail > 0) {
      std::fill(w.begin(), w.begin() + tail, 0.0);
      for (std::size_t i = 0; i < len; ++i) {
        k.axpy(h.v[i], &a[(c + i) * n + c + 1], w.data(), tail);
      }
      for (std::size_t i = 0; i < len; ++i) {
        k.axpy(-h.tau * h.v[i], w.data(), &a[(c + i) * n + c + 1], tail);
      }
    }
    if (tail == 0) break;

    // Right reflector zeroes A[c, c+2:n].
    Reflector& g = right[c];
    bd.e[c + 1] = make_reflector({&a[c * n + c + 1], tail}, g, k);
    if (g.tau != 0.0) {
      for (std::size_t i = c + 1; i < m; ++i) {
        double* row = &a[i * n + c + 1];
        const double proj = k.dot(row, g.v.data(), tail);
        k.axpy(-g.tau * proj, g.v.data(), row, tail);
      }
    }
  }

  if (!want_vectors) return bd;

  bd.ut.assign(n * m, 0.0);
  for (std::size_t j = 0; j < n; ++j) bd.ut[j * m + j] = 1.0;
  for (std::size_t c = n; c-- > 0;) {
    const Reflector& h = left[c];
    if (h.tau == 0.0) continue;
    const std::size_t len = m - c;
    for (std::size_t j = c; j < n; ++j) {
      double* row = &bd.ut[j * m + c];
      const double proj = k.dot(h.v.data(), row, len);
      k.axpy(-h.tau * proj, h.v.data(), row, len);
    }
  }

  bd.vt.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) bd.vt[j * n + j] = 1.0;
  for (std::size_t c = right.size(); c-- > 0;) {
    const Reflector& g = right[c];
    if (g.tau == 0.0) continue;
    const std::size_t len = n - c - 1;
    for (std::size_t j = c + 1; j < n; ++j) {
      double* row = &bd.vt[j * n + c + 1];
      const double proj = k.dot(g.v.data(), row, len);
      k.axpy(-g.tau * proj, g.v.data(), row, len);
    }
  }
  return bd;
}

// Implicit-shift QR on the bidiagonal (d, e), rotating the rows of ut/vt.
void diagonalize(Bidiagonal& bd, bool want_vectors, const kernels::KernelTable& k) {
  const std::size_t n = bd.n;
  const std::size_t m = bd.m;
  auto& d = bd.d;
  auto& e = bd.e;
  const double eps = std::numeric_limits<double>::epsilon();

  double anorm = 0.0;
  for (std::size_t i = 0; i < n; ++i) anorm = std::max(anorm, std::abs(d[i]) + std::abs(e[i]));
  const double small = eps * anorm;

  auto rot_u = [&](std::size_t a, std::size_t b, double c, double s) {
    if (want_vectors) k.rot(&bd.ut[a * m], &bd.ut[b * m], m, c, s);
  };
  auto rot_v = [&](std::size_t a, std::size_t b, double c, double s) {
    if (want_vectors) k.rot(&bd.vt[a * n], &bd.vt[b * n], n, c, s);
  };

  for (std::size_t kk = n; kk-- > 0;) {
    for (int sweep = 0;; ++sweep) {
      // Find the start l of the unreduced block ending at kk.
      std::size_t l = kk;
      bool cancel = false;
      for (;; --l) {
        if (l == 0 || std::abs(e[l]) <= small) break;
        if (std::abs(d[l - 1]) <= small) {
          cancel = true;
          break;
        }
      }
      if (cancel) {
        // d[l-1] is zero: chase e[l] out with rotations from the left.
        const std::size_t nm = l - 1;
        double c = 0.0;
        double s = 1.0;
        for (std::size_t i = l; i <= kk; ++i) {
          const double f = s * e[i];
          e[i] = c * e[i];
          if (std::abs(f) <= small) break;
          const double g = d[i];
          const double h = std::hypot(f, g);
          d[i] = h;
          c = g / h;
          s = -f / h;
          rot_u(nm, i, c, s);
        }
      }

      const double z = d[kk];
      if (l == kk) {
        if (z < 0.0) {
          d[kk] = -z;
          if (want_vectors) k.scal(-1.0, &bd.vt[kk * n], n);
        }
        break;
      }
      if (sweep >= kMaxSweepsPerValue) {
        throw DegenerateInputError("svd: QR iteration failed to converge");
      }

      // Wilkinson-style shift from the trailing 2x2 block.
      double x = d[l];
      const std::size_t nm = kk - 1;
      double y = d[nm];
      double g = e[nm];
      double h = e[kk];
      double f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
      g = std::hypot(f, 1.0);
      f = ((x - z) * (x + z) + h * ((y / (f + std::copysign(g, f))) - h)) / x;

      double c = 1.0;
      double s = 1.0;
      for (std::size_t j = l; j <= nm; ++j) {
        const std::size_t i = j + 1;
        g = e[i];
        y = d[i];
        h = s * g;
        g = c * g;
        double zz = std::hypot(f, h);
        e[j] = zz;
        c = f / zz;
        s = h / zz;
        f = x * c + g * s;
        g = g * c - x * s;
        h = y * s;
        y *= c;
        rot_v(j, i, c, s);
        zz = std::hypot(f, h);
        d[j] = zz;
        if (zz != 0.0) {
          c = f / zz;
          s = h / zz;
        }
        f = c * g + s * y;
        x = c * y - s * g;
        rot_u(j, i, c, s);
      }
      e[l] = 0.0;
      e[kk] = f;
      d[kk] = x;
    }
  }
}

struct Prepared {
  std::vector<double> a;
  std::size_t m;
  std::size_t n;
  bool transposed;
  double scale;
};

Prepared prepare(const Matrix& x) {
  if (!x.all_finite()) throw InvalidInputError("svd: input contains non-finite entries");
  Prepared p;
  p.transposed = x.rows() < x.cols();
  const Matrix& src = x;
  p.m = p.transposed ? x.cols() : x.rows();
  p.n = p.transposed ? x.rows() : x.cols();
  p.scale = inf_norm(x.data());
  if (p.transposed) {
    p.a = x.transposed().storage();
  } else {
    p.a = src.storage();
  }
  if (p.scale > 0.0) {
    for (double& v : p.a) v /= p.scale;
  }
  return p;
}

}  // namespace

void apply_sign_convention(SingularTriplet& t) {
  for (double x : t.u) {
    if (std::abs(x) > 1e-12) {
      if (x < 0.0) {
        for (double& y : t.u) y = -y;
        for (double& y : t.v) y = -y;
      }
      return;
    }
  }
}

Spectrum::Spectrum(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0) || !std::isfinite(values_[i])) {
      throw InvalidInputError("spectrum values must be finite and nonnegative");
    }
    if (i > 0 && values_[i] > values_[i - 1]) {
      throw InvalidInputError("spectrum values must be nonincreasing");
    }
  }
}

double Spectrum::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double Spectrum::sum_squares() const {
  double acc = 0.0;
  for (double v : values_) acc += v * v;
  return acc;
}

SingularTriplet SvdResult::triplet(std::size_t i) const {
  if (i >= s.size()) throw InvalidInputError("svd triplet index out of range");
  SingularTriplet t;
  t.s = s[i];
  t.u.resize(u.rows());
  t.v.resize(v.rows());
  for (std::size_t r = 0; r < u.rows(); ++r) t.u[r] = u(r, i);
  for (std::size_t r = 0; r < v.rows(); ++r) t.v[r] = v(r, i);
  return t;
}

Matrix SvdResult::reconstruct() const {
  Matrix out(u.rows(), v.rows());
  const auto& k = kernels::active();
  Vector ucol(u.rows());
  Vector vcol(v.rows());
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t r = 0; r < u.rows(); ++r) ucol[r] = u(r, i);
    for (std::size_t r = 0; r < v.rows(); ++r) vcol[r] = v(r, i);
    k.ger(out.data().data(), out.rows(), out.cols(), s[i], ucol.data(), vcol.data());
  }
  return out;
}

SvdResult svd(const Matrix& x) {
  const auto& k = kernels::active();
  Prepared p = prepare(x);
  Bidiagonal bd = bidiagonalize(std::move(p.a), p.m, p.n, true, k);
  diagonalize(bd, true, k);

  const std::size_t m = p.m;
  const std::size_t n = p.n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return bd.d[a] > bd.d[b]; });

  // In the original orientation: left vectors live in ut (length m) unless
  // the input was transposed, in which case they live in vt (length n).
  const std::vector<double>& left = p.transposed ? bd.vt : bd.ut;
  const std::vector<double>& right = p.transposed ? bd.ut : bd.vt;
  const std::size_t left_len = p.transposed ? n : m;
  const std::size_t right_len = p.transposed ? m : n;

  Matrix u(left_len, n);
  Matrix v(right_len, n);
  std::vector<double> values(n);
  for (std::size_t col = 0; col < n; ++col) {
    const std::size_t src = order[col];
    values[col] = bd.d[src] * p.scale;
    const double* lrow = &left[src * left_len];
    const double* rrow = &right[src * right_len];
    double sign = 1.0;
    for (std::size_t r = 0; r < left_len; ++r) {
      if (std::abs(lrow[r]) > 1e-12) {
        sign = lrow[r] < 0.0 ? -1.0 : 1.0;
        break;
      }
    }
    for (std::size_t r = 0; r < left_len; ++r) u(r, col) = sign * lrow[r];
    for (std::size_t r = 0; r < right_len; ++r) v(r, col) = sign * rrow[r];
  }
  return SvdResult{std::move(u), Spectrum(std::move(values)), std::move(v)};
}

Spectrum singular_values(const Matrix& x) {
  const auto& k = kernels::active();
  Prepared p = prepare(x);
  Bidiagonal bd = bidiagonalize(std::move(p.a), p.m, p.n, false, k);
  diagonalize(bd, false, k);
  std::vector<double> values = bd.d;
  for (double& v : values) v *= p.scale;
  std::sort(values.begin(), values.end(), std::greater<>());
  return Spectrum(std::move(values));
}

}  // namespace rankfeat
