#include "lcor/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace lcor {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::SCE: return "sce";
    case Algorithm::MSE_OR: return "mse-or";
    case Algorithm::SMSE_OR: return "smse-or";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "sce") return Algorithm::SCE;
  if (s == "mse-or") return Algorithm::MSE_OR;
  if (s == "smse-or") return Algorithm::SMSE_OR;
  throw std::invalid_argument("unknown algorithm '" + s + "' (sce|mse-or|smse-or)");
}

LineSearchResult optimal_learning_factor(const std::function<double(double)>& f,
                                         const LineSearchOptions& options) {
  const double f0 = f(0.0);
  if (!std::isfinite(f0)) throw std::invalid_argument("line search: loss is not finite at z = 0");

  double start = options.initial_step;
  if (options.mode == OlfMode::SecondOrder) {
    const double h = options.probe;
    const double fp = f(h);
    const double fm = f(-h);
    const double d1 = (fp - fm) / (2.0 * h);
    const double d2 = (fp - 2.0 * f0 + fm) / (h * h);
    if (std::isfinite(d1) && std::isfinite(d2) && d2 > 0.0 && d1 < 0.0) {
      const double z = std::min(-d1 / d2, options.z_max);
      const double fz = f(z);
      if (std::isfinite(fz) && fz < f0) return {z, fz, false, false};
      start = z;
    }
  }

  double z = start;
  for (int i = 0; i <= options.max_halvings; ++i, z *= 0.5) {
    const double fz = f(z);
    if (std::isfinite(fz) && fz < f0) return {z, fz, false, true};
  }
  return {0.0, f0, true, true};
}

int TrainerConfig::resolved_iterations() const {
  if (iterations) return *iterations;
  return algorithm == Algorithm::MSE_OR ? 10 : 5000;
}

void TrainerConfig::validate() const {
  if (resolved_iterations() < 1) throw std::invalid_argument("iterations must be >= 1");
  if (or_inner_iterations < 1 || or_inner_iterations > 10) {
    throw std::invalid_argument("or_inner_iterations must lie in [1, 10]");
  }
  if (!(b > 0.0)) throw std::invalid_argument("b must be positive");
  if (!(line_search.probe > 0.0) || !(line_search.z_max > 0.0) || !(line_search.initial_step > 0.0)) {
    throw std::invalid_argument("line search parameters must be positive");
  }
}

Matrix auto_correlation(const Matrix& patterns) {
  if (patterns.rows() == 0) throw std::invalid_argument("auto_correlation over zero patterns");
  Matrix r = gram(patterns);
  const double inv = 1.0 / static_cast<double>(patterns.rows());
  for (double& v : r.values()) v *= inv;
  return r;
}

Matrix cross_correlation(const Matrix& patterns, const Matrix& targets) {
  if (patterns.rows() != targets.rows()) {
    throw DimensionError("cross_correlation: patterns " + patterns.shape() + " vs targets " +
                         targets.shape());
  }
  if (patterns.rows() == 0) throw std::invalid_argument("cross_correlation over zero patterns");
  Matrix c = matmul_at(patterns, targets);
  const double inv = 1.0 / static_cast<double>(patterns.rows());
  for (double& v : c.values()) v *= inv;
  return c;
}

CorrelationPair accumulate_correlations(const AugmentedBatch& batch, const Matrix& targets) {
  return {auto_correlation(batch.patterns), cross_correlation(batch.patterns, targets)};
}

namespace {

double error_rate(const Matrix& scores, const Labels& labels) {
  return classification_error(predict(Discriminants{scores}), labels);
}

void check_pair(const AugmentedBatch& train, const AugmentedBatch& val) {
  if (train.num_patterns() == 0 || val.num_patterns() == 0) {
    throw std::invalid_argument("training and validation sets must be nonempty");
  }
  if (train.num_basis() != val.num_basis() || train.num_classes() != val.num_classes()) {
    throw DimensionError("training " + train.patterns.shape() + "/" + train.targets.shape() +
                         " and validation " + val.patterns.shape() + "/" + val.targets.shape() +
                         " batches disagree");
  }
}

// Appends one evaluation and keeps the earliest best validation weights.
void record(TrainingReport& report, const WeightMatrix& w, double loss, double train_pe,
            double val_pe) {
  const std::size_t k = report.loss_history.size();
  report.loss_history.push_back(loss);
  report.train_pe_history.push_back(train_pe);
  report.val_pe_history.push_back(val_pe);
  if (k == 0 || val_pe < report.val_pe_history[report.best_val_iteration]) {
    report.best_val_iteration = k;
    report.best_weights = w;
  }
}

[[noreturn]] void non_finite(std::size_t k, double loss, const WeightMatrix& w, const char* what) {
  std::ostringstream msg;
  msg << what << ": non-finite loss " << loss << " at iteration " << k
      << " (|W|_F = " << frobenius_norm(w.matrix()) << ", |W|_max = " << max_abs(w.matrix()) << ")";
  throw TrainingError(msg.str());
}

// Loss, error signal and the loss along the ray W - s G for one set of rows.
struct Objective {
  double loss = 0.0;
  ErrorSignal delta;
  Matrix targets;  // t' for SMSE_OR
};

Objective sce_objective(const Matrix& scores, const Labels& labels) {
  const Matrix q = softmax_rows(scores);
  return {cross_entropy(q, labels).value, delta_ce(q, labels), {}};
}

Objective smse_objective(const Matrix& scores, const AugmentedBatch& rows, const TrainerConfig& cfg,
                         const Matrix& targets, const Labels& labels) {
  const Matrix y = sigmoid(scores);
  AdjustedTargets adj = output_reset(cfg.or_variant, y, targets, labels, rows.b, cfg.or_inner_iterations);
  Objective out;
  out.loss = adjusted_mse(y, adj).value;
  out.delta = delta_mse_sigmoid_unchecked(y, adj.t_prime, cfg.mse_delta_form);
  out.targets = std::move(adj.t_prime);
  return out;
}

double sce_ray(const Matrix& scores, const Matrix& dir, const Labels& labels, double s) {
  const std::size_t m = scores.cols();
  std::vector<double> z(m);
  double total = 0.0;
  for (std::size_t p = 0; p < scores.rows(); ++p) {
    auto sr = scores.row(p);
    auto dr = dir.row(p);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      z[i] = sr[i] - s * dr[i];
      top = std::max(top, z[i]);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) norm += std::exp(z[i] - top);
    const double q = std::exp(z[labels[p]] - top) / norm;
    total += -std::log(std::max(q, kProbabilityFloor));
  }
  return total / static_cast<double>(scores.rows());
}

double smse_ray(const Matrix& scores, const Matrix& dir, const Matrix& targets, double s) {
  auto sv = scores.values();
  auto dv = dir.values();
  auto tv = targets.values();
  double total = 0.0;
  for (std::size_t i = 0; i < sv.size(); ++i) {
    const double e = tv[i] - sigmoid(sv[i] - s * dv[i]);
    total += e * e;
  }
  return total / static_cast<double>(scores.rows());
}

// Once W is fixed (full-batch stall or zero risk), every later evaluation repeats the last one.
void pad_fixed(TrainingReport& report, int iterations) {
  const std::size_t last = report.loss_history.size() - 1;
  while (report.loss_history.size() < static_cast<std::size_t>(iterations)) {
    report.loss_history.push_back(report.loss_history[last]);
    report.train_pe_history.push_back(report.train_pe_history[last]);
    report.val_pe_history.push_back(report.val_pe_history[last]);
    report.step_history.push_back(0.0);
  }
}

struct RowSampler {
  std::vector<std::size_t> order;
  std::size_t cursor = 0;

  RowSampler(std::size_t n, std::uint64_t seed) : order(n) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }

  std::vector<std::size_t> next(std::size_t count) {
    std::vector<std::size_t> rows;
    rows.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      rows.push_back(order[cursor]);
      cursor = (cursor + 1) % order.size();
    }
    return rows;
  }
};

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

TrainingReport train_lc_or(const AugmentedBatch& train, const AugmentedBatch& val,
                           const TrainerConfig& cfg) {
  cfg.validate();
  if (cfg.algorithm != Algorithm::MSE_OR) throw std::invalid_argument("train_lc_or requires algorithm mse-or");
  check_pair(train, val);

  const OlsSolver solver(auto_correlation(train.patterns), cfg.ridge_policy);
  WeightMatrix w(solver.solve(cross_correlation(train.patterns, train.targets)).solution);

  TrainingReport report;
  const int iterations = cfg.resolved_iterations();
  for (int k = 0; k < iterations; ++k) {
    const Matrix y = forward(w, train).y;
    const AdjustedTargets adj =
        output_reset(cfg.or_variant, y, train.targets, train.labels, train.b, cfg.or_inner_iterations);
    const double loss = adjusted_mse(y, adj).value;
    if (!std::isfinite(loss)) non_finite(static_cast<std::size_t>(k), loss, w, "train_lc_or");
    record(report, w, loss, error_rate(y, train.labels), error_rate(forward(w, val).y, val.labels));
    report.step_history.push_back(0.0);

    if (loss < cfg.zero_risk_tolerance) {
      report.halted_zero_risk = true;
      if (!cfg.halt_on_zero_risk) pad_fixed(report, iterations);
      break;
    }
    if (k + 1 == iterations) break;
    try {
      w = WeightMatrix(solver.solve(cross_correlation(train.patterns, adj.t_prime)).solution);
    } catch (const std::exception& e) {
      throw TrainingError("train_lc_or: solve failed at iteration " + std::to_string(k + 1) + ": " +
                          e.what());
    }
  }
  report.final_weights = w;
  return report;
}

TrainingReport train_gd(const AugmentedBatch& train, const AugmentedBatch& val,
                        const TrainerConfig& cfg) {
  cfg.validate();
  if (cfg.algorithm == Algorithm::MSE_OR) throw std::invalid_argument("train_gd handles sce and smse-or only");
  check_pair(train, val);

  const bool sce = cfg.algorithm == Algorithm::SCE;
  const std::size_t n = train.num_patterns();
  const bool mini = cfg.batch_size > 0 && cfg.batch_size < n;
  RowSampler sampler(mini ? n : 1, cfg.seed);

  WeightMatrix w = WeightMatrix::zeros(train.num_classes(), train.num_basis());
  TrainingReport report;
  const int iterations = cfg.resolved_iterations();
  for (int k = 0; k < iterations; ++k) {
    const std::size_t kk = static_cast<std::size_t>(k);
    const Matrix scores = forward(w, train).y;
    Objective obj = sce ? sce_objective(scores, train.labels)
                        : smse_objective(scores, train, cfg, train.targets, train.labels);
    if (!std::isfinite(obj.loss)) non_finite(kk, obj.loss, w, "train_gd");
    record(report, w, obj.loss, error_rate(scores, train.labels), error_rate(forward(w, val).y, val.labels));
    if (k + 1 == iterations) {
      report.step_history.push_back(0.0);
      break;
    }

    // Step rows: the whole training set, or the next mini-batch.
    const Matrix* patterns = &train.patterns;
    const Matrix* step_scores = &scores;
    const Labels* labels = &train.labels;
    Matrix batch_patterns, batch_scores;
    Labels batch_labels;
    if (mini) {
      const auto rows = sampler.next(cfg.batch_size);
      batch_patterns = take_rows(train.patterns, rows);
      batch_scores = take_rows(scores, rows);
      batch_labels.reserve(rows.size());
      for (std::size_t r : rows) batch_labels.push_back(train.labels[r]);
      const Matrix batch_targets = take_rows(train.targets, rows);
      obj = sce ? sce_objective(batch_scores, batch_labels)
                : smse_objective(batch_scores, train, cfg, batch_targets, batch_labels);
      patterns = &batch_patterns;
      step_scores = &batch_scores;
      labels = &batch_labels;
    }

    const Matrix g = gradient(obj.delta, *patterns);
    const double gnorm = frobenius_norm(g);
    if (!(gnorm > 0.0)) {
      report.step_history.push_back(0.0);
      report.stall_iterations.push_back(kk);
      if (mini) continue;
      pad_fixed(report, iterations);
      break;
    }
    const Matrix dir = matmul_bt(*patterns, g);
    std::function<double(double)> ray;
    if (sce) {
      ray = [&](double s) { return sce_ray(*step_scores, dir, *labels, s); };
    } else {
      ray = [&](double s) { return smse_ray(*step_scores, dir, obj.targets, s); };
    }
    LineSearchOptions ls = cfg.line_search;
    ls.probe = cfg.line_search.probe / gnorm;
    const LineSearchResult step = optimal_learning_factor(ray, ls);
    report.step_history.push_back(step.step);
    if (step.stalled) {
      report.stall_iterations.push_back(kk);
      if (mini) continue;
      pad_fixed(report, iterations);
      break;
    }
    w = WeightMatrix(w.matrix() - step.step * g);
  }
  report.final_weights = w;
  return report;
}

TrainingReport train(const AugmentedBatch& train_set, const AugmentedBatch& val, const TrainerConfig& cfg) {
  return cfg.algorithm == Algorithm::MSE_OR ? train_lc_or(train_set, val, cfg) : train_gd(train_set, val, cfg);
}

}  // namespace lcor
