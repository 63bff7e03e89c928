#pragma once

#include "lcor/datasets.hpp"
#include "lcor/evaluation.hpp"
#include "lcor/trainers.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcor::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRuntime = 3 };

/// Invalid flags, config documents or missing input paths.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where the patterns come from. Explicit image/label paths override the
/// named-dataset lookup under `data_root`.
struct DatasetSpec {
  std::string name;  ///< mnist | fashion-mnist | cifar10 | idx | synthetic | two-gaussians
  std::filesystem::path data_root;
  std::filesystem::path images;
  std::filesystem::path labels;
  NormalizeMode normalize = NormalizeMode::Auto;
  std::size_t synth_classes = 4;
  std::size_t synth_features = 8;
  std::size_t synth_per_class = 250;
  double synth_scale = 1.0;
  /// Keep a seeded random subset of n patterns, in file order (0 keeps all).
  std::size_t limit = 0;
};

struct RunConfig {
  DatasetSpec dataset;
  TrainerConfig trainer;
  /// Algorithms for `kfold`; empty means trainer.algorithm only.
  std::vector<Algorithm> algorithms;
  /// Set before any command runs; generated when absent.
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "lcor_out";
  std::size_t folds_run = 0;
  std::size_t folds = 10;
  unsigned jobs = 1;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  // diagnose
  std::filesystem::path weights;
  std::string targets = "raw";  ///< raw | classic | type2 | pe
  std::optional<double> outlier_threshold;  ///< default 3 b
};

/// Builds a config from a flat JSON object. Unknown keys and bad values
/// raise ConfigError.
RunConfig config_from_json(const nlohmann::json& doc);
/// Flat JSON record of a config, seed included.
nlohmann::json config_to_json(const RunConfig& cfg);
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Fills in a random seed when none is set.
RunConfig with_seed(RunConfig cfg);

/// Loads and normalizes the configured dataset; missing paths raise
/// ConfigError naming the path.
Dataset load_dataset(const DatasetSpec& spec, std::uint64_t seed);

void write_weights(const WeightMatrix& w, const RunConfig& cfg, const std::filesystem::path& path);
struct LoadedWeights {
  WeightMatrix w;
  Algorithm algorithm = Algorithm::MSE_OR;
  double b = 1.0;
};
LoadedWeights read_weights(const std::filesystem::path& path);

struct TrainOutcome {
  TrainingReport report;
  double test_pe = 0.0;  ///< percent
  std::uint64_t seed = 0;
  std::filesystem::path report_json, history_csv, weights_json, final_weights_json;
};

/// Single run on a seeded 80/10/10 split. Writes report.json, history.csv,
/// weights.json (best validation iteration) and final_weights.json under cfg.out.
TrainOutcome cmd_train(const RunConfig& cfg);

struct KFoldOutcome {
  ResultTable results;
  EmittedFiles files;
  std::filesystem::path run_json;
  std::uint64_t seed = 0;
};

/// k-fold protocol for each configured algorithm; writes results.csv,
/// summary.txt, per-fold histories and run.json under cfg.out.
KFoldOutcome cmd_kfold(const RunConfig& cfg);

/// Error census of stored weights over the configured dataset, written to
/// diagnostics.json. Sigmoid-trained weights are scored in sigmoid space.
ErrorDiagnostics cmd_diagnose(const RunConfig& cfg);

struct LemmaFiles {
  std::filesystem::path mse_limits, type2_limits, scenario, scenario_weights;
};

/// Numerical limit tables for the unbounded MSE and the OR type 2 loss, and
/// the two-class, two-feature scenario data.
LemmaFiles cmd_demo_lemmas(const RunConfig& cfg);

/// Loads, validates and summarizes a dataset into dataset.json.
std::filesystem::path cmd_prepare_data(const RunConfig& cfg);

}  // namespace lcor::cli
