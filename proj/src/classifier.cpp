#include "lcor/classifier.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace lcor {

WeightMatrix::WeightMatrix(Matrix w) : w_(std::move(w)) {
  if (!w_.all_finite()) throw std::invalid_argument("weight matrix contains non-finite entries");
}

Matrix one_hot_targets(std::span<const Label> labels, std::size_t num_classes, double b) {
  if (!(b > 0.0)) throw std::invalid_argument("target level b must be positive");
  Matrix t(labels.size(), num_classes);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] >= num_classes) {
      throw std::out_of_range("label " + std::to_string(labels[p]) + " out of range [0, " +
                              std::to_string(num_classes) + ") at row " + std::to_string(p));
    }
    t(p, labels[p]) = b;
  }
  return t;
}

AugmentedBatch augment(const Dataset& raw, std::span<const std::size_t> rows, double b) {
  if (raw.num_features() == 0) throw std::invalid_argument("empty feature vector");
  if (rows.empty()) throw std::invalid_argument("cannot augment an empty set of patterns");
  if (raw.features.rows() != raw.labels.size()) {
    throw DimensionError("dataset has " + std::to_string(raw.features.rows()) + " rows but " +
                         std::to_string(raw.labels.size()) + " labels");
  }
  const std::size_t n = raw.num_features();
  AugmentedBatch batch;
  batch.b = b;
  batch.patterns = Matrix(rows.size(), n + 1);
  batch.labels.reserve(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p) {
    const std::size_t src = rows[p];
    if (src >= raw.size()) throw std::out_of_range("row index " + std::to_string(src) + " out of range");
    auto out = batch.patterns.row(p);
    out[0] = 1.0;
    auto in = raw.features.row(src);
    std::copy(in.begin(), in.end(), out.begin() + 1);
    batch.labels.push_back(raw.labels[src]);
  }
  batch.targets = one_hot_targets(batch.labels, raw.num_classes, b);
  return batch;
}

AugmentedBatch augment(const Dataset& raw, double b) {
  std::vector<std::size_t> rows(raw.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return augment(raw, rows, b);
}

Discriminants forward(const WeightMatrix& w, const Matrix& patterns) {
  if (w.basis() != patterns.cols()) {
    throw DimensionError("forward: weights " + w.matrix().shape() + " vs patterns " +
                         patterns.shape());
  }
  return Discriminants{matmul_bt(patterns, w.matrix())};
}

Discriminants forward(const WeightMatrix& w, const AugmentedBatch& batch) {
  return forward(w, batch.patterns);
}

Label argmax(std::span<const double> row) {
  Label best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

Labels predict(const Discriminants& y) {
  if (y.y.cols() < 2) throw std::invalid_argument("predict needs at least two classes");
  Labels out(y.y.rows());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = argmax(y.y.row(p));
  return out;
}

double classification_error(std::span<const Label> predicted, std::span<const Label> labels) {
  if (predicted.size() != labels.size()) {
    throw DimensionError("classification_error: " + std::to_string(predicted.size()) +
                         " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw std::invalid_argument("classification_error on empty input");
  std::size_t wrong = 0;
  for (std::size_t p = 0; p < labels.size(); ++p) wrong += predicted[p] != labels[p];
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

}  // namespace lcor
