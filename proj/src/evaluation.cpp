#include "lcor/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace lcor {

namespace fs = std::filesystem;

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t f : fold_assignment) ++sizes[f];
  return sizes;
}

FoldPlan::Split FoldPlan::split(std::size_t fold) const {
  if (fold >= k) throw std::out_of_range("fold " + std::to_string(fold) + " out of range");
  const std::size_t val_a = (fold + 1) % k;
  const std::size_t val_b = (fold + 2) % k;
  Split s;
  for (std::size_t p = 0; p < fold_assignment.size(); ++p) {
    const std::size_t f = fold_assignment[p];
    if (f == fold) {
      s.test.push_back(p);
    } else if (f == val_a || f == val_b) {
      s.validation.push_back(p);
    } else {
      s.train.push_back(p);
    }
  }
  return s;
}

FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 4) throw std::invalid_argument("k-fold needs k >= 4 (1 test, 2 validation, >= 1 train)");
  if (n < k) {
    throw std::invalid_argument("cannot split " + std::to_string(n) + " patterns into " +
                                std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold_assignment.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) plan.fold_assignment[order[i]] = i % k;
  return plan;
}

namespace {

TrainingReport run_fold(const Dataset& d, const TrainerConfig& cfg, const FoldPlan& plan, std::size_t fold) {
  const auto split = plan.split(fold);
  const AugmentedBatch train_set = augment(d, split.train, cfg.b);
  const AugmentedBatch val_set = augment(d, split.validation, cfg.b);
  const AugmentedBatch test_set = augment(d, split.test, cfg.b);
  TrainingReport report = train(train_set, val_set, cfg);
  const Labels predicted = predict(forward(report.best_weights, test_set));
  report.final_test_pe = 100.0 * classification_error(predicted, test_set.labels);
  return report;
}

}  // namespace

KFoldResult run_kfold(const Dataset& d, const TrainerConfig& cfg, const FoldPlan& plan,
                      const KFoldOptions& options) {
  if (!d.normalized) throw std::invalid_argument("run_kfold expects a normalized dataset");
  if (plan.fold_assignment.size() != d.size()) {
    throw DimensionError("fold plan covers " + std::to_string(plan.fold_assignment.size()) +
                         " patterns, dataset has " + std::to_string(d.size()));
  }
  cfg.validate();

  const std::size_t count =
      options.folds_to_run == 0 ? plan.k : std::min(options.folds_to_run, plan.k);
  std::vector<TrainingReport> reports(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < count; f = next++) {
      try {
        reports[f] = run_fold(d, cfg, plan, f);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(count)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (std::size_t f = 0; f < count; ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const std::exception& e) {
      throw TrainingError("fold " + std::to_string(f) + ": " + e.what());
    }
  }

  KFoldResult result;
  result.dataset = d.name;
  result.algorithm = to_string(cfg.algorithm);
  result.total_folds = plan.k;
  result.seed = plan.seed;
  double pe_sum = 0.0;
  double iter_sum = 0.0;
  for (std::size_t f = 0; f < count; ++f) {
    result.folds.push_back(f);
    pe_sum += reports[f].final_test_pe;
    iter_sum += static_cast<double>(reports[f].best_val_iteration);
  }
  result.average_testing_pe = pe_sum / static_cast<double>(count);
  result.best_average_validation_iteration = iter_sum / static_cast<double>(count);
  result.per_fold = std::move(reports);
  return result;
}

ErrorDiagnostics diagnose_errors(const Matrix& y, const Matrix& t, std::span<const Label> labels,
                                 double outlier_threshold) {
  require_same_shape(y, t, "diagnose_errors");
  if (labels.size() != y.rows()) {
    throw DimensionError("diagnose_errors: " + std::to_string(y.rows()) + " rows vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t m = y.cols();
  ErrorDiagnostics out;
  out.num_patterns = y.rows();
  out.num_classes = m;
  out.outlier_threshold = outlier_threshold;
  out.per_class.assign(m, {});
  out.pattern_bias.reserve(y.rows());

  for (std::size_t p = 0; p < y.rows(); ++p) {
    const Label c = labels[p];
    if (c >= m) throw std::out_of_range("diagnose_errors: invalid label at row " + std::to_string(p));
    auto yr = y.row(p);
    auto tr = t.row(p);
    ClassDiagnostics& cls = out.per_class[c];
    ++cls.patterns;
    if (argmax(yr) != c) {
      ++cls.misclassified;
      ++out.misclassified;
    }
    double my = 0.0;
    double mt = 0.0;
    bool outlier = false;
    for (std::size_t i = 0; i < m; ++i) {
      my += yr[i];
      mt += tr[i];
      const double e = yr[i] - tr[i];
      if (e == 0.0) {
        ++cls.zero_error;
      } else if ((i == c) == (e > 0.0)) {
        ++cls.inconsistent;
      } else {
        ++cls.consistent;
      }
      if (std::abs(e) > outlier_threshold) {
        ++cls.outlier_slots;
        outlier = true;
      }
    }
    out.outlier_patterns += outlier;
    const double bias = std::abs(my - mt) / static_cast<double>(m);
    out.pattern_bias.push_back(bias);
    out.mean_pattern_bias += bias;
    out.max_pattern_bias = std::max(out.max_pattern_bias, bias);
  }
  for (const auto& cls : out.per_class) {
    out.consistent += cls.consistent;
    out.inconsistent += cls.inconsistent;
    out.zero_error += cls.zero_error;
    out.outlier_slots += cls.outlier_slots;
  }
  if (out.num_patterns > 0) out.mean_pattern_bias /= static_cast<double>(out.num_patterns);
  return out;
}

namespace {

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string file_token(std::string s) {
  for (char& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  return s;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

EmittedFiles emit_results(const ResultTable& results, const fs::path& dir) {
  const KFoldResult* first = nullptr;
  for (const auto& [name, by_algo] : results)
    if (first == nullptr && !by_algo.empty()) first = &by_algo.begin()->second;
  if (first == nullptr) throw std::invalid_argument("no results");

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());

  EmittedFiles files;
  files.csv = dir / "results.csv";
  files.summary = dir / "summary.txt";

  std::ofstream csv = open_out(files.csv);
  csv << "dataset,algorithm,kind,fold,average_testing_pe,best_average_validation_iteration\n";
  std::ofstream summary = open_out(files.summary);
  summary << "k-fold testing results\n";
  summary << std::left << std::setw(16) << "Dataset" << std::setw(10) << "Algorithm" << std::setw(20)
          << "Average Testing PE" << "Best Average Validation Iteration\n";

  for (const auto& [dataset, by_algo] : results) {
    for (const auto& [algorithm, r] : by_algo) {
      csv << dataset << ',' << algorithm << ",summary,all," << exact(r.average_testing_pe) << ','
          << exact(r.best_average_validation_iteration) << '\n';
      for (std::size_t i = 0; i < r.per_fold.size(); ++i) {
        const TrainingReport& rep = r.per_fold[i];
        csv << dataset << ',' << algorithm << ",fold," << r.folds[i] << ',' << exact(rep.final_test_pe)
            << ',' << rep.best_val_iteration << '\n';

        const fs::path hist = dir / ("history_" + file_token(dataset) + "_" + file_token(algorithm) +
                                     "_fold" + std::to_string(r.folds[i]) + ".csv");
        std::ofstream h = open_out(hist);
        h << "iteration,loss,train_pe,val_pe\n";
        for (std::size_t k = 0; k < rep.loss_history.size(); ++k) {
          h << k << ',' << exact(rep.loss_history[k]) << ',' << exact(100.0 * rep.train_pe_history[k])
            << ',' << exact(100.0 * rep.val_pe_history[k]) << '\n';
        }
        files.histories.push_back(hist);
      }

      std::ostringstream pe, it;
      pe << std::fixed << std::setprecision(4) << r.average_testing_pe;
      it << std::fixed << std::setprecision(1) << r.best_average_validation_iteration;
      summary << std::left << std::setw(16) << dataset << std::setw(10) << algorithm << std::setw(20)
              << pe.str() << it.str();
      if (r.subset()) {
        summary << "  (" << r.per_fold.size() << " of " << r.total_folds << " folds)";
      }
      summary << '\n';
    }
  }
  summary << "seed: " << first->seed << '\n';
  if (!csv || !summary) throw std::runtime_error("failed writing results to " + dir.string());
  return files;
}

std::vector<ResultRow> read_results_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw std::runtime_error("malformed results row: " + line);
    rows.push_back({cells[0], cells[1], cells[2], cells[3], std::strtod(cells[4].c_str(), nullptr),
                    std::strtod(cells[5].c_str(), nullptr)});
  }
  return rows;
}

}  // namespace lcor
