#pragma once

#include <cstddef>

#include "rankfeat/matrix.hpp"

namespace rankfeat {

/// A C x H x W feature map reshaped to a C x (H*W) matrix.
class FeatureMatrix {
 public:
  /// `post_activation` marks ReLU-output semantics; such features must be
  /// elementwise nonnegative.
  FeatureMatrix(std::size_t height, std::size_t width, Matrix mat,
                bool post_activation = false);
  /// Single spatial row: H = 1, W = mat.cols().
  explicit FeatureMatrix(Matrix mat, bool post_activation = false);

  std::size_t channels() const noexcept { return mat_.rows(); }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t spatial() const noexcept { return height_ * width_; }
  bool post_activation() const noexcept { return post_activation_; }
  const Matrix& mat() const noexcept { return mat_; }

  FeatureMatrix with_matrix(Matrix mat) const;

 private:
  std::size_t height_;
  std::size_t width_;
  Matrix mat_;
  bool post_activation_;
};

/// Final linear map producing Q >= 2 logits.
class ClassifierHead {
 public:
  ClassifierHead(Matrix weight, Vector bias);

  const Matrix& weight() const noexcept { return weight_; }
  const Vector& bias() const noexcept { return bias_; }
  std::size_t classes() const noexcept { return weight_.rows(); }
  std::size_t channels() const noexcept { return weight_.cols(); }

 private:
  Matrix weight_;
  Vector bias_;
};

/// Linear layer mapping a C_prev-channel feature to C channels.
class LinearLayer {
 public:
  explicit LinearLayer(Matrix mat);
  const Matrix& mat() const noexcept { return mat_; }

 private:
  Matrix mat_;
};

using Logits = Vector;

/// Global average pooling vector: HW entries of 1/(HW).
Vector gap_vector(std::size_t height, std::size_t width);

/// X m, the pooled channel vector.
Vector pool(const FeatureMatrix& x);

/// W (X m) + b.
Logits forward_head(const FeatureMatrix& x, const ClassifierHead& head);

/// W z + b for an already pooled vector z.
Logits head_logits(std::span<const double> pooled, const ClassifierHead& head);

/// M X with the spatial layout of `prev`.
FeatureMatrix forward_layer(const FeatureMatrix& prev, const LinearLayer& layer);

}  // namespace rankfeat
