#include "lcor/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lcor {

namespace {

struct Householder {
  std::vector<double> qr;    // column-major n x n
  std::vector<double> beta;  // 2 / v^T v, zero for an identity reflector
  std::vector<double> diag;  // u_kk
};

// In-place Householder triangularization of a column-major square matrix.
Householder factor(std::vector<double> a, std::size_t n) {
  Householder h{std::move(a), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t k = 0; k < n; ++k) {
    double* colk = h.qr.data() + k * n;
    double norm2 = 0.0;
    for (std::size_t i = k; i < n; ++i) norm2 += colk[i] * colk[i];
    if (norm2 == 0.0) continue;
    const double norm = std::sqrt(norm2);
    const double alpha = colk[k] > 0.0 ? -norm : norm;
    // v = x - alpha e_k, stored in place of x
    const double v0 = colk[k] - alpha;
    const double vnorm2 = norm2 - colk[k] * colk[k] + v0 * v0;
    colk[k] = v0;
    h.diag[k] = alpha;
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;
    h.beta[k] = beta;
    for (std::size_t j = k + 1; j < n; ++j) {
      double* colj = h.qr.data() + j * n;
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += colk[i] * colj[i];
      s *= beta;
      for (std::size_t i = k; i < n; ++i) colj[i] -= s * colk[i];
    }
  }
  return h;
}

double pivot_ratio(const std::vector<double>& diag) {
  if (diag.empty()) return 1.0;
  double hi = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (double d : diag) {
    hi = std::max(hi, std::abs(d));
    lo = std::min(lo, std::abs(d));
  }
  constexpr double kMax = std::numeric_limits<double>::max();
  if (hi == 0.0) return kMax;
  if (lo < std::numeric_limits<double>::min()) return kMax;
  const double ratio = hi / lo;
  return std::isfinite(ratio) ? ratio : kMax;
}

std::vector<double> symmetrized_column_major(const Matrix& r, double tolerance) {
  const std::size_t n = r.rows();
  const double scale = max_abs(r);
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double rij = r(i, j);
      const double rji = r(j, i);
      if (std::abs(rij - rji) > tolerance * scale) {
        throw std::invalid_argument("autocorrelation is not symmetric at (" + std::to_string(i) +
                                    ", " + std::to_string(j) + ")");
      }
      a[j * n + i] = 0.5 * (rij + rji);
    }
  }
  return a;
}

}  // namespace

OlsSolver::OlsSolver(const Matrix& r, OlsOptions options) : n_(r.rows()) {
  if (r.rows() != r.cols()) throw DimensionError("autocorrelation must be square, got " + r.shape());
  if (n_ == 0) throw DimensionError("autocorrelation is empty");
  if (max_abs(r) == 0.0) throw std::invalid_argument("degenerate autocorrelation");

  auto a = symmetrized_column_major(r, options.symmetry_tolerance);
  Householder h = factor(a, n_);
  condition_ = pivot_ratio(h.diag);

  if (condition_ > options.ridge_threshold) {
    double level = trace(r) / static_cast<double>(n_);
    if (!(level > 0.0)) level = max_abs(r);
    ridge_ = options.ridge_scale * level;
    for (std::size_t i = 0; i < n_; ++i) a[i * n_ + i] += ridge_;
    h = factor(std::move(a), n_);
  }
  qr_ = std::move(h.qr);
  beta_ = std::move(h.beta);
  diag_ = std::move(h.diag);
}

SolveReport OlsSolver::solve(const Matrix& c) const {
  if (c.rows() != n_) {
    throw DimensionError("cross-correlation rows must match autocorrelation: " + c.shape() +
                         " vs " + std::to_string(n_) + "x" + std::to_string(n_));
  }
  const std::size_t m = c.cols();
  Matrix w(m, n_);
  std::vector<double> x(n_);
  for (std::size_t col = 0; col < m; ++col) {
    for (std::size_t i = 0; i < n_; ++i) x[i] = c(i, col);
    // x <- Q^T x
    for (std::size_t k = 0; k < n_; ++k) {
      if (beta_[k] == 0.0) continue;
      const double* v = qr_.data() + k * n_;
      double s = 0.0;
      for (std::size_t i = k; i < n_; ++i) s += v[i] * x[i];
      s *= beta_[k];
      for (std::size_t i = k; i < n_; ++i) x[i] -= s * v[i];
    }
    // U x = Q^T c, column-oriented back substitution
    for (std::size_t j = n_; j-- > 0;) {
      if (diag_[j] == 0.0) {
        x[j] = 0.0;
        continue;
      }
      x[j] /= diag_[j];
      const double* uj = qr_.data() + j * n_;
      for (std::size_t i = 0; i < j; ++i) x[i] -= uj[i] * x[j];
    }
    for (std::size_t i = 0; i < n_; ++i) w(col, i) = x[i];
  }
  if (!w.all_finite()) throw std::runtime_error("ols_solve produced non-finite weights");
  return SolveReport{std::move(w), condition_, ridge_ > 0.0, ridge_};
}

SolveReport ols_solve(const Matrix& r, const Matrix& c, OlsOptions options) {
  if (r.rows() != r.cols()) throw DimensionError("autocorrelation must be square, got " + r.shape());
  if (c.rows() != r.rows()) {
    throw DimensionError("cross-correlation shape mismatch: " + c.shape() + " vs " + r.shape());
  }
  return OlsSolver(r, options).solve(c);
}

double condition_estimate(const Matrix& r) {
  if (r.rows() != r.cols()) throw DimensionError("condition_estimate needs a square matrix, got " + r.shape());
  const std::size_t n = r.rows();
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[j * n + i] = r(i, j);
  return pivot_ratio(factor(std::move(a), n).diag);
}

}  // namespace lcor
