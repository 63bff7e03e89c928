#include "lcor/matrix.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace lcor {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMajor>;
using View = Eigen::Map<RowMajor>;

ConstView view(const Matrix& m) {
  return ConstView(m.data(), static_cast<Eigen::Index>(m.rows()),
                   static_cast<Eigen::Index>(m.cols()));
}

View view(Matrix& m) {
  return View(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

[[noreturn]] void shape_error(const char* what, const Matrix& a, const Matrix& b) {
  throw DimensionError(std::string(what) + ": " + a.shape() + " vs " + b.shape());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape());
  }
  if (!all_finite()) throw std::invalid_argument("matrix data contains NaN or Inf");
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged initializer for Matrix");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

void Matrix::append_rows(const Matrix& other) {
  if (other.cols_ != cols_) shape_error("append_rows column mismatch", *this, other);
  data_.reserve(data_.size() + other.data_.size());
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  rows_ += other.rows_;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_error("matmul shape mismatch", a, b);
  Matrix out(a.rows(), b.cols());
  if (out.empty() || a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b);
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) shape_error("matmul_bt shape mismatch", a, b);
  Matrix out(a.rows(), b.rows());
  if (out.empty() || a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) shape_error("matmul_at shape mismatch", a, b);
  Matrix out(a.cols(), b.cols());
  if (out.empty() || a.rows() == 0) return out;
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Matrix gram(const Matrix& a) {
  Matrix out(a.cols(), a.cols());
  if (out.empty() || a.rows() == 0) return out;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(view(a).transpose());
  view(out) = g.selfadjointView<Eigen::Lower>();
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix sum");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix difference");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

double max_abs(const Matrix& a) noexcept {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::abs(av[i] - bv[i]));
  return m;
}

double frobenius_norm(const Matrix& a) noexcept {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double trace(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("trace of non-square matrix " + a.shape());
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
  return s;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(what, a, b);
}

}  // namespace lcor
