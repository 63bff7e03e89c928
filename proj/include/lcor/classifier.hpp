#pragma once

#include "lcor/datasets.hpp"
#include "lcor/matrix.hpp"

#include <span>

namespace lcor {

/// Patterns with the constant-1 basis function prepended, and their
/// one-versus-all targets (b at the correct class, 0 elsewhere).
struct AugmentedBatch {
  Matrix patterns;  ///< N_v x N_u, column 0 is all ones
  Matrix targets;   ///< N_v x M
  Labels labels;
  double b = 1.0;

  std::size_t num_patterns() const noexcept { return patterns.rows(); }
  std::size_t num_basis() const noexcept { return patterns.cols(); }
  std::size_t num_classes() const noexcept { return targets.cols(); }
};

/// M x N_u map from augmented input to discriminant vector.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  explicit WeightMatrix(Matrix w);
  static WeightMatrix zeros(std::size_t classes, std::size_t basis) {
    return WeightMatrix(Matrix(classes, basis));
  }

  const Matrix& matrix() const noexcept { return w_; }
  std::size_t classes() const noexcept { return w_.rows(); }
  std::size_t basis() const noexcept { return w_.cols(); }

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  Matrix w_;
};

/// Output scores, one row per pattern.
struct Discriminants {
  Matrix y;
};

Matrix one_hot_targets(std::span<const Label> labels, std::size_t num_classes, double b);

AugmentedBatch augment(const Dataset& raw, double b = 1.0);
AugmentedBatch augment(const Dataset& raw, std::span<const std::size_t> rows, double b = 1.0);

/// y_p = W x_ap for every row; no output activation.
Discriminants forward(const WeightMatrix& w, const AugmentedBatch& batch);
Discriminants forward(const WeightMatrix& w, const Matrix& patterns);

/// Row-wise argmax; ties go to the lowest class index.
Labels predict(const Discriminants& y);
Label argmax(std::span<const double> row);

/// Fraction of mismatches, in [0, 1].
double classification_error(std::span<const Label> predicted, std::span<const Label> labels);

}  // namespace lcor
