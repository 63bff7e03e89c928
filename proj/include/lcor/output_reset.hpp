#pragma once

#include "lcor/datasets.hpp"
#include "lcor/losses.hpp"
#include "lcor/matrix.hpp"

#include <span>
#include <string>
#include <vector>

namespace lcor {

/// Target-adjustment procedure applied before an MSE step.
enum class OrVariant {
  None,            ///< t' = t
  Classic,         ///< per-pattern bias a_p plus sign-constrained offsets d_p(i)
  Type2,           ///< clip targets to outputs that overshoot in the safe direction
  PeProportional,  ///< every misclassified pattern contributes exactly 2 b^2
};

std::string to_string(OrVariant v);
OrVariant parse_or_variant(const std::string& s);

struct AdjustedTargets {
  Matrix t_prime;       ///< N_v x M
  std::vector<double> a;  ///< a_p; zero for all variants but Classic
  Matrix d;             ///< d_p(i); t' - t - a for every variant
  OrVariant variant = OrVariant::None;
};

inline constexpr int kClassicOrIterations = 3;

/// Classic output reset. Per pattern, starting from a = d = 0, repeats
/// `iterations` times:
///   a    = mean_i (y - t - d)
///   d_c  = max(0, y_c - a - t_c)     for the correct class
///   d_i  = min(0, y_i - a - t_i)     for every other class
/// and finishes with one more a step so the returned a is the exact
/// minimizer of E' for the returned d. t' = t + a + d.
AdjustedTargets or_classic(const Matrix& y, const Matrix& t, std::span<const Label> labels,
                           int iterations = kClassicOrIterations);

/// Type 2: t'(c) = y(c) where the correct output overshoots its target,
/// t'(i) = y(i) where a wrong output undershoots; otherwise t' = t.
AdjustedTargets or_type2(const Matrix& y, const Matrix& t, std::span<const Label> labels);

/// Pe-proportional reset. Correct patterns get t' = y. A misclassified
/// pattern with K wrong outputs strictly above the correct one gets
///   t'(c) = y(c) + K eps,  t'(i_k) = y(i_k) - eps,  eps = b sqrt(2 / (K^2 + K)),
/// so it contributes exactly 2 b^2. A pattern lost only to an argmax tie
/// (K = 0 but predicted wrong) is treated as K = 1 against the predicted class.
AdjustedTargets or_pe(const Matrix& y, const Matrix& t, std::span<const Label> labels, double b);

AdjustedTargets output_reset(OrVariant variant, const Matrix& y, const Matrix& t,
                             std::span<const Label> labels, double b,
                             int classic_iterations = kClassicOrIterations);

/// E' = (1/N_v) sum_p sum_i (t'_p(i) - y_p(i))^2
LossValue adjusted_mse(const Matrix& y, const AdjustedTargets& adjusted,
                       bool keep_per_pattern = false);

}  // namespace lcor
