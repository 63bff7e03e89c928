#include "lcor/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lcor {

namespace {

void check_labels(std::span<const Label> labels, std::size_t rows, std::size_t classes,
                  const char* what) {
  if (labels.size() != rows) {
    throw DimensionError(std::string(what) + ": " + std::to_string(rows) + " rows vs " +
                         std::to_string(labels.size()) + " labels");
  }
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] >= classes) {
      throw std::out_of_range(std::string(what) + ": invalid label " + std::to_string(labels[p]) +
                              " at row " + std::to_string(p));
    }
  }
}

LossValue finish(std::vector<double> per, bool keep) {
  double sum = 0.0;
  for (double v : per) sum += v;
  LossValue out;
  out.value = per.empty() ? 0.0 : sum / static_cast<double>(per.size());
  if (keep) out.per_pattern = std::move(per);
  return out;
}

}  // namespace

LossValue mse(const Matrix& y, const Matrix& t, bool keep_per_pattern) {
  require_same_shape(y, t, "mse");
  std::vector<double> per(y.rows(), 0.0);
  for (std::size_t p = 0; p < y.rows(); ++p) {
    auto yr = y.row(p);
    auto tr = t.row(p);
    double s = 0.0;
    for (std::size_t i = 0; i < yr.size(); ++i) {
      const double e = tr[i] - yr[i];
      s += e * e;
    }
    per[p] = s;
  }
  return finish(std::move(per), keep_per_pattern);
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> q(z.size());
  if (z.empty()) return q;
  const double top = *std::max_element(z.begin(), z.end());
  double norm = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    q[i] = std::exp(z[i] - top);
    norm += q[i];
  }
  for (double& v : q) v /= norm;
  return q;
}

Matrix softmax_rows(const Matrix& z) {
  Matrix q(z.rows(), z.cols());
  for (std::size_t p = 0; p < z.rows(); ++p) {
    const auto row = softmax(z.row(p));
    std::copy(row.begin(), row.end(), q.row(p).begin());
  }
  return q;
}

LossValue cross_entropy(const Matrix& q, std::span<const Label> labels, bool keep_per_pattern) {
  check_labels(labels, q.rows(), q.cols(), "cross_entropy");
  std::vector<double> per(q.rows());
  for (std::size_t p = 0; p < q.rows(); ++p) {
    auto row = q.row(p);
    double total = 0.0;
    for (double v : row) total += v;
    if (std::abs(total - 1.0) > 1e-6) {
      throw std::invalid_argument("cross_entropy: probabilities of row " + std::to_string(p) +
                                  " sum to " + std::to_string(total));
    }
    per[p] = -std::log(std::max(row[labels[p]], kProbabilityFloor));
  }
  return finish(std::move(per), keep_per_pattern);
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& z) {
  Matrix y = z;
  for (double& v : y.values()) v = sigmoid(v);
  return y;
}

ErrorSignal delta_ce(const Matrix& q, std::span<const Label> labels) {
  check_labels(labels, q.rows(), q.cols(), "delta_ce");
  ErrorSignal out{q};
  for (std::size_t p = 0; p < q.rows(); ++p) out.delta(p, labels[p]) -= 1.0;
  return out;
}

ErrorSignal delta_mse_linear(const Matrix& y, const Matrix& t) {
  require_same_shape(y, t, "delta_mse_linear");
  ErrorSignal out{Matrix(y.rows(), y.cols())};
  auto d = out.delta.values();
  auto yv = y.values();
  auto tv = t.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = -2.0 * (tv[i] - yv[i]);
  return out;
}

ErrorSignal delta_mse_sigmoid_unchecked(const Matrix& y, const Matrix& t, MseDeltaForm form) {
  require_same_shape(y, t, "delta_mse_sigmoid");
  ErrorSignal out{Matrix(y.rows(), y.cols())};
  for (std::size_t p = 0; p < y.rows(); ++p) {
    auto yr = y.row(p);
    auto tr = t.row(p);
    auto dr = out.delta.row(p);
    double summed = 0.0;
    if (form == MseDeltaForm::LiteralSummed)
      for (std::size_t i = 0; i < yr.size(); ++i) summed += tr[i] - yr[i];
    for (std::size_t c = 0; c < yr.size(); ++c) {
      const double slope = yr[c] * (1.0 - yr[c]);
      const double err = form == MseDeltaForm::PerOutput ? tr[c] - yr[c] : summed;
      dr[c] = -2.0 * err * slope;
    }
  }
  return out;
}

ErrorSignal delta_mse_sigmoid(const Matrix& y, const Matrix& t, MseDeltaForm form) {
  for (double v : y.values()) {
    if (!(v > 0.0 && v < 1.0)) {
      throw std::invalid_argument("delta_mse_sigmoid: output " + std::to_string(v) +
                                  " outside (0, 1)");
    }
  }
  return delta_mse_sigmoid_unchecked(y, t, form);
}

Matrix gradient(const ErrorSignal& delta, const Matrix& patterns) {
  if (delta.delta.rows() != patterns.rows()) {
    throw DimensionError("gradient: delta " + delta.delta.shape() + " vs patterns " + patterns.shape());
  }
  if (patterns.rows() == 0) throw std::invalid_argument("gradient over zero patterns");
  Matrix g = matmul_at(delta.delta, patterns);
  const double inv = 1.0 / static_cast<double>(patterns.rows());
  for (double& v : g.values()) v *= inv;
  return g;
}

}  // namespace lcor
