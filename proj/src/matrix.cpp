#include "rankfeat/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rankfeat/error.hpp"
#include "rankfeat/kernels.hpp"

namespace rankfeat {
namespace {

void check_dims(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw InvalidInputError("matrix dimensions must be positive, got " +
                            std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInputError(std::string(op) + ": shape mismatch " +
                            std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols) {
  check_dims(rows, cols);
  data_.assign(rows * cols, fill);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  check_dims(rows, cols);
  if (data_.size() != rows * cols) {
    throw InvalidInputError("matrix data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows) + "x" +
                            std::to_string(cols));
  }
}

Matrix Matrix::from_external(std::size_t rows, std::size_t cols,
                             std::vector<double> data) {
  Matrix m(rows, cols, std::move(data));
  if (!m.all_finite()) throw InvalidInputError("matrix contains non-finite entries");
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  return diagonal(diag.size(), diag.size(), diag);
}

Matrix Matrix::diagonal(std::size_t rows, std::size_t cols,
                        std::span<const double> diag) {
  Matrix m(rows, cols);
  if (diag.size() > m.min_dim()) {
    throw InvalidInputError("diagonal longer than the smaller dimension");
  }
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::outer(double s, std::span<const double> u, std::span<const double> v) {
  Matrix m(u.size(), v.size());
  kernels::active().ger(m.data().data(), m.rows(), m.cols(), s, u.data(), v.data());
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

double Matrix::frobenius_norm() const {
  // Scaled accumulation keeps huge or tiny entries from over/underflowing.
  double scale = 0.0;
  for (double x : data_) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double acc = 0.0;
  for (double x : data_) {
    const double r = x / scale;
    acc += r * r;
  }
  return scale * std::sqrt(acc);
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

bool Matrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  check_same_shape(*this, other, "operator+=");
  kernels::active().axpy(1.0, other.data_.data(), data_.data(), data_.size());
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  check_same_shape(*this, other, "operator-=");
  kernels::active().axpy(-1.0, other.data_.data(), data_.data(), data_.size());
  return *this;
}

Matrix& Matrix::operator*=(double alpha) {
  kernels::active().scal(alpha, data_.data(), data_.size());
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double alpha, Matrix a) { return a *= alpha; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidInputError("matmul: inner dimensions differ (" +
                            std::to_string(a.cols()) + " vs " +
                            std::to_string(b.rows()) + ")");
  }
  Matrix c(a.rows(), b.cols());
  kernels::active().gemm(a.data().data(), b.data().data(), c.data().data(), a.rows(),
                         a.cols(), b.cols());
  return c;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw InvalidInputError("matvec: length mismatch");
  Vector y(a.rows());
  kernels::active().gemv(a.data().data(), a.rows(), a.cols(), x.data(), y.data());
  return y;
}

Vector matvec_t(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) throw InvalidInputError("matvec_t: length mismatch");
  Vector y(a.cols());
  kernels::active().gemv_t(a.data().data(), a.rows(), a.cols(), x.data(), y.data());
  return y;
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInputError("dot: length mismatch");
  return kernels::active().dot(x.data(), y.data(), x.size());
}

double norm2(std::span<const double> x) {
  return std::sqrt(kernels::active().dot(x.data(), x.data(), x.size()));
}

double inf_norm(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    for (double x : a.row(i)) sum += std::abs(x);
    best = std::max(best, sum);
  }
  return best;
}

double inf_norm(std::span<const double> x) {
  double best = 0.0;
  for (double v : x) best = std::max(best, std::abs(v));
  return best;
}

}  // namespace rankfeat
