#pragma once

#include "lcor/classifier.hpp"
#include "lcor/linalg.hpp"
#include "lcor/losses.hpp"
#include "lcor/output_reset.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcor {

enum class Algorithm {
  SCE,     ///< softmax cross-entropy, gradient descent
  MSE_OR,  ///< linear outputs, correlation solve with output reset (LC-OR)
  SMSE_OR, ///< sigmoid outputs, MSE with output reset, gradient descent
};

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

enum class OlfMode { SecondOrder, Backtracking };

struct LineSearchOptions {
  OlfMode mode = OlfMode::SecondOrder;
  /// Finite-difference half-width along the ray. Trainers divide this by
  /// the gradient norm so it is a distance in weight space.
  double probe = 1e-3;
  double z_max = 1e6;
  double initial_step = 1.0;
  int max_halvings = 30;
};

struct LineSearchResult {
  double step = 0.0;
  double loss = 0.0;  ///< f(step)
  bool stalled = false;
  bool used_backtracking = false;
};

/// Picks a learning factor z for f(z) = loss(W - z G).
///
/// SecondOrder takes the Newton step -f'(0)/f''(0) from central differences,
/// clamped to (0, z_max], and keeps it when it lowers the loss. Otherwise,
/// and always in Backtracking mode, the step is halved (at most
/// `max_halvings` times) until f(z) < f(0). A stall returns step 0.
LineSearchResult optimal_learning_factor(const std::function<double(double)>& f,
                                         const LineSearchOptions& options = {});

struct TrainerConfig {
  Algorithm algorithm = Algorithm::SMSE_OR;
  /// Unset: 10 outer iterations for MSE_OR, 5000 for the gradient trainers.
  std::optional<int> iterations;
  OrVariant or_variant = OrVariant::Classic;
  int or_inner_iterations = kClassicOrIterations;
  double b = 1.0;
  std::uint64_t seed = 0;
  LineSearchOptions line_search;
  OlsOptions ridge_policy;
  MseDeltaForm mse_delta_form = MseDeltaForm::PerOutput;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  /// LC-OR freezes W once E' falls below zero_risk_tolerance; with halting
  /// the run ends there, otherwise histories are padded to the full count.
  bool halt_on_zero_risk = true;
  double zero_risk_tolerance = 1e-10;

  int resolved_iterations() const;
  void validate() const;
};

/// Histories are indexed by iteration k = number of weight updates applied
/// before the evaluation, so entry 0 describes the initial weights. A
/// full-batch line-search stall repeats the last evaluation up to the
/// configured count; LC-OR stops early once E' reaches zero.
struct TrainingReport {
  std::vector<double> loss_history;      ///< E, E' or CE at W_k
  std::vector<double> train_pe_history;  ///< fraction
  std::vector<double> val_pe_history;    ///< fraction
  std::vector<double> step_history;      ///< learning factor applied after k (0 for LC-OR)
  std::vector<std::size_t> stall_iterations;
  std::size_t best_val_iteration = 0;
  WeightMatrix best_weights;
  WeightMatrix final_weights;
  bool halted_zero_risk = false;
  double final_test_pe = 0.0;  ///< percent, filled by the evaluation harness

  std::size_t iterations_run() const noexcept { return loss_history.size(); }
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorrelationPair {
  Matrix r;  ///< (1/N_v) sum x_ap x_ap^T, N_u x N_u
  Matrix c;  ///< (1/N_v) sum x_ap t_p^T, N_u x M
};

Matrix auto_correlation(const Matrix& patterns);
Matrix cross_correlation(const Matrix& patterns, const Matrix& targets);
CorrelationPair accumulate_correlations(const AugmentedBatch& batch, const Matrix& targets);

/// Output-reset linear classifier: R is fixed and factored once; every outer
/// iteration resets the targets from the current outputs, rebuilds C and
/// re-solves for W.
TrainingReport train_lc_or(const AugmentedBatch& train, const AugmentedBatch& val,
                           const TrainerConfig& cfg);

/// Gradient descent from zero weights with an optimal learning factor per
/// iteration, for SCE and SMSE_OR.
TrainingReport train_gd(const AugmentedBatch& train, const AugmentedBatch& val,
                        const TrainerConfig& cfg);

/// Dispatches on cfg.algorithm.
TrainingReport train(const AugmentedBatch& train, const AugmentedBatch& val,
                     const TrainerConfig& cfg);

}  // namespace lcor
