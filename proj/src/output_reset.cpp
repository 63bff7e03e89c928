#include "lcor/output_reset.hpp"

#include "lcor/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcor {

namespace {

void check_inputs(const Matrix& y, const Matrix& t, std::span<const Label> labels, const char* what) {
  require_same_shape(y, t, what);
  if (labels.size() != y.rows()) {
    throw DimensionError(std::string(what) + ": " + std::to_string(y.rows()) + " rows vs " +
                         std::to_string(labels.size()) + " labels");
  }
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] >= y.cols()) {
      throw std::out_of_range(std::string(what) + ": invalid label at row " + std::to_string(p));
    }
  }
}

// Fills d = t' - t and zero a for the variants that adjust t' directly.
AdjustedTargets from_t_prime(Matrix t_prime, const Matrix& t, OrVariant variant) {
  AdjustedTargets out;
  out.d = t_prime - t;
  out.t_prime = std::move(t_prime);
  out.a.assign(t.rows(), 0.0);
  out.variant = variant;
  return out;
}

}  // namespace

std::string to_string(OrVariant v) {
  switch (v) {
    case OrVariant::None: return "none";
    case OrVariant::Classic: return "classic";
    case OrVariant::Type2: return "type2";
    case OrVariant::PeProportional: return "pe";
  }
  return "unknown";
}

OrVariant parse_or_variant(const std::string& s) {
  if (s == "none") return OrVariant::None;
  if (s == "classic") return OrVariant::Classic;
  if (s == "type2") return OrVariant::Type2;
  if (s == "pe") return OrVariant::PeProportional;
  throw std::invalid_argument("unknown output reset variant '" + s + "' (classic|type2|pe|none)");
}

AdjustedTargets or_classic(const Matrix& y, const Matrix& t, std::span<const Label> labels,
                           int iterations) {
  check_inputs(y, t, labels, "or_classic");
  if (iterations < 1) throw std::invalid_argument("or_classic needs at least one iteration");

  const std::size_t m = y.cols();
  AdjustedTargets out;
  out.variant = OrVariant::Classic;
  out.t_prime = Matrix(y.rows(), m);
  out.d = Matrix(y.rows(), m);
  out.a.assign(y.rows(), 0.0);

  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t p = 0; p < y.rows(); ++p) {
    auto yr = y.row(p);
    auto tr = t.row(p);
    auto dr = out.d.row(p);
    const Label c = labels[p];
    auto bias_step = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += yr[i] - tr[i] - dr[i];
      return s * inv_m;
    };
    double a = 0.0;
    for (int it = 0; it < iterations; ++it) {
      a = bias_step();
      for (std::size_t i = 0; i < m; ++i) {
        const double r = yr[i] - a - tr[i];
        dr[i] = i == c ? std::max(0.0, r) : std::min(0.0, r);
      }
    }
    a = bias_step();
    out.a[p] = a;
    auto tp = out.t_prime.row(p);
    for (std::size_t i = 0; i < m; ++i) tp[i] = tr[i] + a + dr[i];
  }
  return out;
}

AdjustedTargets or_type2(const Matrix& y, const Matrix& t, std::span<const Label> labels) {
  check_inputs(y, t, labels, "or_type2");
  Matrix tp = t;
  for (std::size_t p = 0; p < y.rows(); ++p) {
    auto yr = y.row(p);
    auto row = tp.row(p);
    for (std::size_t i = 0; i < y.cols(); ++i) {
      const bool correct = i == labels[p];
      if ((correct && yr[i] > row[i]) || (!correct && yr[i] < row[i])) row[i] = yr[i];
    }
  }
  return from_t_prime(std::move(tp), t, OrVariant::Type2);
}

AdjustedTargets or_pe(const Matrix& y, const Matrix& t, std::span<const Label> labels, double b) {
  check_inputs(y, t, labels, "or_pe");
  if (!(b > 0.0)) throw std::invalid_argument("or_pe needs b > 0");
  Matrix tp = y;
  std::vector<std::size_t> violators;
  for (std::size_t p = 0; p < y.rows(); ++p) {
    auto yr = y.row(p);
    const Label c = labels[p];
    violators.clear();
    for (std::size_t i = 0; i < yr.size(); ++i)
      if (i != c && yr[i] > yr[c]) violators.push_back(i);
    if (violators.empty()) {
      const Label predicted = argmax(yr);
      if (predicted == c) continue;
      violators.push_back(predicted);
    }
    const double k = static_cast<double>(violators.size());
    const double eps = b * std::sqrt(2.0 / (k * k + k));
    auto row = tp.row(p);
    row[c] = yr[c] + k * eps;
    for (std::size_t i : violators) row[i] = yr[i] - eps;
  }
  return from_t_prime(std::move(tp), t, OrVariant::PeProportional);
}

AdjustedTargets output_reset(OrVariant variant, const Matrix& y, const Matrix& t,
                             std::span<const Label> labels, double b, int classic_iterations) {
  switch (variant) {
    case OrVariant::Classic: return or_classic(y, t, labels, classic_iterations);
    case OrVariant::Type2: return or_type2(y, t, labels);
    case OrVariant::PeProportional: return or_pe(y, t, labels, b);
    case OrVariant::None: break;
  }
  check_inputs(y, t, labels, "output_reset");
  return from_t_prime(t, t, OrVariant::None);
}

LossValue adjusted_mse(const Matrix& y, const AdjustedTargets& adjusted, bool keep_per_pattern) {
  return mse(y, adjusted.t_prime, keep_per_pattern);
}

}  // namespace lcor
