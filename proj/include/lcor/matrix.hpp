#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcor {

/// Raised when operand shapes do not line up. The message names both shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  /// Adopts external data; throws if the length is wrong or any entry is
  /// not finite.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  /// Appends the rows of `other`, which must have the same column count.
  void append_rows(const Matrix& other);

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  Matrix transpose() const;
  bool all_finite() const noexcept;

  /// "3x2"
  std::string shape() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without forming the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);
/// a^T * b without forming the transpose.
Matrix matmul_at(const Matrix& a, const Matrix& b);
/// a^T * a, computed as a symmetric rank-k update.
Matrix gram(const Matrix& a);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double max_abs(const Matrix& a) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a) noexcept;
double trace(const Matrix& a);

/// Throws DimensionError("<what>: <a.shape()> vs <b.shape()>") unless the
/// shapes match exactly.
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

}  // namespace lcor
