#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rankfeat {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles with at least one row and one column.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Same as the data constructor, but also rejects NaN/Inf entries.
  static Matrix from_external(std::size_t rows, std::size_t cols,
                              std::vector<double> data);
  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix diagonal(std::size_t rows, std::size_t cols,
                         std::span<const double> diag);
  /// s * u v^T
  static Matrix outer(double s, std::span<const double> u,
                      std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t min_dim() const noexcept { return rows_ < cols_ ? rows_ : cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  Matrix transposed() const;
  double frobenius_norm() const;
  bool all_finite() const;
  bool is_zero() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double alpha);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double alpha, Matrix a);

/// A * B
Matrix matmul(const Matrix& a, const Matrix& b);
/// A x
Vector matvec(const Matrix& a, std::span<const double> x);
/// A^T x
Vector matvec_t(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);

/// Induced infinity norm: max absolute row sum.
double inf_norm(const Matrix& a);
/// Max absolute entry.
double inf_norm(std::span<const double> x);

}  // namespace rankfeat
