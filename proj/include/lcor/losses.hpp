#pragma once

#include "lcor/classifier.hpp"
#include "lcor/matrix.hpp"

#include <optional>
#include <span>
#include <vector>

namespace lcor {

struct LossValue {
  double value = 0.0;
  /// Per-pattern contributions; `value` is their mean.
  std::optional<std::vector<double>> per_pattern;
};

/// dE/dz per pattern and output, where z is the pre-activation score.
struct ErrorSignal {
  Matrix delta;  ///< N_v x M
};

/// (1/N_v) sum_p sum_i (t_p(i) - y_p(i))^2
LossValue mse(const Matrix& y, const Matrix& t, bool keep_per_pattern = false);
inline LossValue mse(const Discriminants& y, const Matrix& t, bool keep_per_pattern = false) {
  return mse(y.y, t, keep_per_pattern);
}

/// Max-shifted softmax of one score row.
std::vector<double> softmax(std::span<const double> z);
Matrix softmax_rows(const Matrix& z);

inline constexpr double kProbabilityFloor = 1e-15;

/// Mean of -log q(c_n | x_n), with q clamped to kProbabilityFloor. Rows of
/// `q` must sum to one within 1e-6.
LossValue cross_entropy(const Matrix& q, std::span<const Label> labels,
                        bool keep_per_pattern = false);

/// Logistic function evaluated without overflow for large |z|.
double sigmoid(double z) noexcept;
Matrix sigmoid(const Matrix& z);

/// q - onehot(c_n)
ErrorSignal delta_ce(const Matrix& q, std::span<const Label> labels);

/// d/dz of sum_i (t_i - y_i)^2 for linear outputs: -2 (t - y).
ErrorSignal delta_mse_linear(const Matrix& y, const Matrix& t);

enum class MseDeltaForm {
  PerOutput,      ///< -2 (t_c - y_c) y_c (1 - y_c); the exact derivative
  LiteralSummed,  ///< -2 sum_i (t_i - y_i) * y_c (1 - y_c); not a gradient of MSE
};

/// Error signal of MSE through a sigmoid output. `y` holds sigmoid outputs,
/// which must lie strictly inside (0, 1).
ErrorSignal delta_mse_sigmoid(const Matrix& y, const Matrix& t,
                              MseDeltaForm form = MseDeltaForm::PerOutput);

/// Same as delta_mse_sigmoid without the range check, for saturated outputs
/// produced during training (y == 1.0 gives a zero signal, the correct limit).
ErrorSignal delta_mse_sigmoid_unchecked(const Matrix& y, const Matrix& t,
                                        MseDeltaForm form = MseDeltaForm::PerOutput);

/// G = (1/N_v) delta^T X_a, shaped M x N_u.
Matrix gradient(const ErrorSignal& delta, const Matrix& patterns);
inline Matrix gradient(const ErrorSignal& delta, const AugmentedBatch& batch) {
  return gradient(delta, batch.patterns);
}

}  // namespace lcor
