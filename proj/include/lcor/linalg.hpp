#pragma once

#include "lcor/matrix.hpp"

#include <vector>

namespace lcor {

struct SolveReport {
  Matrix solution;  ///< W, shaped M x N_u
  double condition_estimate = 0.0;
  bool regularization_applied = false;
  double ridge_value = 0.0;  ///< > 0 iff regularization_applied
};

struct OlsOptions {
  /// Condition proxy above which a ridge is added and the factorization redone.
  double ridge_threshold = 1e10;
  /// lambda = ridge_scale * trace(R) / N_u
  double ridge_scale = 1e-8;
  /// Relative asymmetry tolerated in R before it is rejected.
  double symmetry_tolerance = 1e-9;
};

/// Orthogonal least-squares solver for C = R * W^T.
///
/// R is symmetrized, factored once by Householder triangularization (R = QU)
/// and the factor is reused for every right-hand side, so callers that keep
/// R fixed while the cross-correlation changes (output reset training) pay
/// for the factorization only once.
class OlsSolver {
 public:
  explicit OlsSolver(const Matrix& r, OlsOptions options = {});

  /// Solves for every column of `c` (N_u x M) and returns W as M x N_u.
  SolveReport solve(const Matrix& c) const;

  std::size_t dimension() const noexcept { return n_; }
  /// Proxy of the unregularized R.
  double condition_estimate() const noexcept { return condition_; }
  bool regularized() const noexcept { return ridge_ > 0.0; }
  double ridge() const noexcept { return ridge_; }

 private:
  std::size_t n_ = 0;
  // Column-major: Householder vectors on and below the diagonal, U above it.
  std::vector<double> qr_;
  std::vector<double> beta_;
  std::vector<double> diag_;
  double condition_ = 0.0;
  double ridge_ = 0.0;
};

/// One-shot factor + solve.
SolveReport ols_solve(const Matrix& r, const Matrix& c, OlsOptions options = {});

/// max|u_ii| / min|u_ii| over the triangular factor of r. Returns the largest
/// finite double when a pivot vanishes or underflows.
double condition_estimate(const Matrix& r);

}  // namespace lcor
