#pragma once

#include "lcor/datasets.hpp"
#include "lcor/trainers.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lcor {

/// Random partition of the patterns into k folds of near-equal size.
struct FoldPlan {
  std::vector<std::size_t> fold_assignment;  ///< fold index per pattern
  std::size_t k = 10;
  std::uint64_t seed = 0;

  struct Split {
    std::vector<std::size_t> train, validation, test;
  };

  std::vector<std::size_t> fold_sizes() const;
  /// test = fold f, validation = folds f+1 and f+2 (mod k), train = the rest.
  Split split(std::size_t fold) const;
};

FoldPlan make_folds(std::size_t n, std::size_t k = 10, std::uint64_t seed = 0);

struct KFoldResult {
  std::string dataset;
  std::string algorithm;
  std::vector<std::size_t> folds;        ///< fold index of each report
  std::vector<TrainingReport> per_fold;
  double average_testing_pe = 0.0;       ///< percent
  double best_average_validation_iteration = 0.0;
  std::size_t total_folds = 10;
  std::uint64_t seed = 0;

  bool subset() const noexcept { return per_fold.size() != total_folds; }
};

struct KFoldOptions {
  /// 0 runs every fold; otherwise only the first `folds_to_run`.
  std::size_t folds_to_run = 0;
  /// Folds trained concurrently.
  unsigned jobs = 1;
};

/// Trains one model per fold, selects the best-validation weights and scores
/// them on the held-out fold. The dataset must be normalized.
KFoldResult run_kfold(const Dataset& d, const TrainerConfig& cfg, const FoldPlan& plan,
                      const KFoldOptions& options = {});

struct ClassDiagnostics {
  std::size_t patterns = 0;
  std::size_t misclassified = 0;
  std::size_t consistent = 0;
  std::size_t inconsistent = 0;
  std::size_t zero_error = 0;
  std::size_t outlier_slots = 0;
};

/// Error-type census of a set of outputs against their targets. Each output
/// slot is exactly one of: consistent (correct output below its target or a
/// wrong output above it), inconsistent (the opposite strict inequalities)
/// or zero-error (y == t).
struct ErrorDiagnostics {
  std::size_t num_patterns = 0;
  std::size_t num_classes = 0;
  std::size_t consistent = 0;
  std::size_t inconsistent = 0;
  std::size_t zero_error = 0;
  std::size_t outlier_slots = 0;
  std::size_t outlier_patterns = 0;
  std::size_t misclassified = 0;
  double outlier_threshold = 0.0;
  std::vector<double> pattern_bias;  ///< |m_y(p) - m_t(p)|
  double mean_pattern_bias = 0.0;
  double max_pattern_bias = 0.0;
  std::vector<ClassDiagnostics> per_class;
};

ErrorDiagnostics diagnose_errors(const Matrix& y, const Matrix& t, std::span<const Label> labels,
                                 double outlier_threshold);

/// dataset -> algorithm -> result
using ResultTable = std::map<std::string, std::map<std::string, KFoldResult>>;

struct EmittedFiles {
  std::filesystem::path csv;
  std::filesystem::path summary;
  std::vector<std::filesystem::path> histories;
};

/// Writes results.csv (one summary row and one row per fold for each
/// dataset/algorithm pair), summary.txt laid out like the benchmark tables,
/// and one history CSV per fold (iteration, loss, train_pe, val_pe; P_e in
/// percent).
EmittedFiles emit_results(const ResultTable& results, const std::filesystem::path& dir);

struct ResultRow {
  std::string dataset;
  std::string algorithm;
  std::string kind;  ///< "summary" or "fold"
  std::string fold;  ///< fold index, or "all" for summary rows
  double average_testing_pe = 0.0;
  double best_average_validation_iteration = 0.0;
};

std::vector<ResultRow> read_results_csv(const std::filesystem::path& csv);

}  // namespace lcor
