#include "rankfeat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rankfeat/error.hpp"
#include "rankfeat/kernels.hpp"

namespace rankfeat {
namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t height, std::size_t width, Matrix mat,
                             bool post_activation)
    : height_(height), width_(width), mat_(std::move(mat)),
      post_activation_(post_activation) {
  if (height_ * width_ != mat_.cols()) {
    throw InvalidInputError("feature matrix has " + std::to_string(mat_.cols()) +
                            " columns but H*W = " + std::to_string(height_ * width_));
  }
  if (!mat_.all_finite()) throw InvalidInputError("feature matrix has non-finite entries");
  if (post_activation_) {
    const auto d = mat_.data();
    if (std::any_of(d.begin(), d.end(), [](double v) { return v < 0.0; })) {
      throw InvalidInputError("post-activation feature has negative entries");
    }
  }
}

FeatureMatrix::FeatureMatrix(Matrix mat, bool post_activation)
    : FeatureMatrix(1, mat.cols(), std::move(mat), post_activation) {}

FeatureMatrix FeatureMatrix::with_matrix(Matrix mat) const {
  return FeatureMatrix(height_, width_, std::move(mat), false);
}

ClassifierHead::ClassifierHead(Matrix weight, Vector bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (weight_.rows() < 2) throw InvalidInputError("classifier head needs Q >= 2 classes");
  if (bias_.size() != weight_.rows()) {
    throw InvalidInputError("classifier bias has length " + std::to_string(bias_.size()) +
                            " but weight has " + std::to_string(weight_.rows()) + " rows");
  }
  if (!weight_.all_finite() ||
      !std::all_of(bias_.begin(), bias_.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidInputError("classifier head has non-finite parameters");
  }
}

LinearLayer::LinearLayer(Matrix mat) : mat_(std::move(mat)) {
  if (!mat_.all_finite()) throw InvalidInputError("linear layer has non-finite entries");
}

Vector gap_vector(std::size_t height, std::size_t width) {
  const std::size_t hw = height * width;
  if (hw == 0) throw InvalidInputError("gap_vector: H*W must be >= 1");
  return Vector(hw, 1.0 / static_cast<double>(hw));
}

Vector pool(const FeatureMatrix& x) {
  const Vector m = gap_vector(x.height(), x.width());
  return matvec(x.mat(), m);
}

Logits head_logits(std::span<const double> pooled, const ClassifierHead& head) {
  if (pooled.size() != head.channels()) {
    throw InvalidInputError("head expects " + std::to_string(head.channels()) +
                            " channels, got " + std::to_string(pooled.size()));
  }
  Logits y = matvec(head.weight(), pooled);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += head.bias()[i];
  return y;
}

Logits forward_head(const FeatureMatrix& x, const ClassifierHead& head) {
  if (head.channels() != x.channels()) {
    throw InvalidInputError("head weight is " +
                            shape_str(head.weight().rows(), head.weight().cols()) +
                            " but feature has " + std::to_string(x.channels()) + " channels");
  }
  return head_logits(pool(x), head);
}

FeatureMatrix forward_layer(const FeatureMatrix& prev, const LinearLayer& layer) {
  if (layer.mat().cols() != prev.channels()) {
    throw InvalidInputError("layer is " + shape_str(layer.mat().rows(), layer.mat().cols()) +
                            " but feature has " + std::to_string(prev.channels()) +
                            " channels");
  }
  return FeatureMatrix(prev.height(), prev.width(), matmul(layer.mat(), prev.mat()));
}

}  // namespace rankfeat
