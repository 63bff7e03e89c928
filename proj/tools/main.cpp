#include "lcor/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace lcor::cli;

// Collects flags that were given on the command line as JSON overrides.
class Overrides {
 public:
  template <class T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto slot = std::make_shared<std::optional<T>>();
    app->add_option(flag, *slot, help);
    apply_.push_back([slot, key](json& doc) {
      if (*slot) doc[key] = **slot;
    });
  }

  void apply(json& doc) const {
    for (const auto& f : apply_) f(doc);
  }

 private:
  std::vector<std::function<void(json&)>> apply_;
};

struct Command {
  CLI::App* app = nullptr;
  Overrides flags;
  std::string config;
};

void add_common(Command& c) {
  c.app->add_option("--config", c.config, "flat JSON config; flags override its values");
  Overrides& f = c.flags;
  f.add<std::string>(c.app, "--dataset", "dataset", "mnist|fashion-mnist|cifar10|idx|synthetic|two-gaussians");
  f.add<std::string>(c.app, "--data-root", "data_root", "dataset root (default: LCOR_DATA_ROOT)");
  f.add<std::string>(c.app, "--images", "images", "IDX image file");
  f.add<std::string>(c.app, "--labels", "labels", "IDX label file");
  f.add<std::string>(c.app, "--normalize", "normalize", "auto|byte255|minmax");
  f.add<std::size_t>(c.app, "--limit", "limit", "keep a seeded subset of this many patterns");
  f.add<std::size_t>(c.app, "--synth-classes", "synth_classes", "synthetic class count");
  f.add<std::size_t>(c.app, "--synth-features", "synth_features", "synthetic feature count");
  f.add<std::size_t>(c.app, "--synth-per-class", "synth_per_class", "synthetic patterns per class");
  f.add<double>(c.app, "--synth-scale", "synth_scale", "synthetic cluster standard deviation");
  f.add<std::uint64_t>(c.app, "--seed", "seed", "random seed (generated and recorded when absent)");
  f.add<std::string>(c.app, "--out", "out", "output directory");
}

void add_training(Command& c) {
  Overrides& f = c.flags;
  f.add<std::string>(c.app, "--algo", "algo", "sce|mse-or|smse-or (kfold also accepts all or a list)");
  f.add<std::string>(c.app, "--or-variant", "or_variant", "classic|type2|pe|none");
  f.add<int>(c.app, "--iters", "iters", "training iterations");
  f.add<int>(c.app, "--or-inner-iters", "or_inner_iterations", "classic output reset passes");
  f.add<double>(c.app, "--b", "b", "target value of the correct class");
  f.add<std::size_t>(c.app, "--batch-size", "batch_size", "mini-batch size (0: full batch)");
  f.add<std::string>(c.app, "--olf", "olf", "second-order|backtracking");
  f.add<std::string>(c.app, "--mse-delta", "mse_delta", "per-output|summed");
  f.add<bool>(c.app, "--halt-on-zero-risk", "halt_on_zero_risk", "end LC-OR runs at zero risk instead of padding histories");
}

int run(const std::string& name, const RunConfig& cfg) {
  if (name == "train") {
    const TrainOutcome r = cmd_train(cfg);
    std::cout << "seed " << r.seed << "\n"
              << "iterations " << r.report.iterations_run() << ", best validation iteration "
              << r.report.best_val_iteration << "\n"
              << "test PE " << r.test_pe << "%\n"
              << "wrote " << r.report_json.string() << "\n";
  } else if (name == "kfold") {
    const KFoldOutcome r = cmd_kfold(cfg);
    std::cout << "seed " << r.seed << "\n";
    for (const auto& [ds, by_algo] : r.results) {
      for (const auto& [algo, res] : by_algo) {
        std::cout << ds << ' ' << algo << ": average testing PE " << res.average_testing_pe
                  << "%, best average validation iteration " << res.best_average_validation_iteration;
        if (res.subset()) std::cout << " (" << res.per_fold.size() << " of " << res.total_folds << " folds)";
        std::cout << "\n";
      }
    }
    std::cout << "wrote " << r.files.csv.string() << "\n";
  } else if (name == "diagnose") {
    const lcor::ErrorDiagnostics d = cmd_diagnose(cfg);
    std::cout << "patterns " << d.num_patterns << ", misclassified " << d.misclassified << "\n"
              << "consistent " << d.consistent << ", inconsistent " << d.inconsistent << ", zero-error "
              << d.zero_error << "\n"
              << "outlier slots " << d.outlier_slots << " (threshold " << d.outlier_threshold << ")\n"
              << "mean pattern bias " << d.mean_pattern_bias << "\n";
  } else if (name == "demo-lemmas") {
    const LemmaFiles f = cmd_demo_lemmas(cfg);
    std::cout << "wrote " << f.mse_limits.string() << ", " << f.type2_limits.string() << ", "
              << f.scenario.string() << "\n";
  } else if (name == "prepare-data") {
    std::cout << "wrote " << cmd_prepare_data(cfg).string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear classifiers trained with MSE and output reset"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](const std::string& name, const std::string& help, bool training, bool kfold, bool diagnose) {
    auto c = std::make_unique<Command>();
    c->app = app.add_subcommand(name, help);
    add_common(*c);
    if (training) add_training(*c);
    if (kfold) {
      c->flags.add<unsigned>(c->app, "--jobs", "jobs", "folds trained concurrently");
      c->flags.add<std::size_t>(c->app, "--folds-run", "folds_run", "run only the first n folds");
      c->flags.add<std::size_t>(c->app, "--folds", "folds", "fold count");
    }
    if (diagnose) {
      c->flags.add<std::string>(c->app, "--weights", "weights", "weights.json or final_weights.json from train");
      c->flags.add<std::string>(c->app, "--targets", "targets", "raw|classic|type2|pe");
      c->flags.add<double>(c->app, "--outlier-threshold", "outlier_threshold", "default 3 b");
    }
    commands.push_back(std::move(c));
  };
  add("train", "single run on an 80/10/10 split", true, false, false);
  add("kfold", "k-fold benchmark protocol", true, true, false);
  add("diagnose", "error census of stored weights", false, false, true);
  add("demo-lemmas", "loss limit tables and the two-class scenario", false, false, false);
  add("prepare-data", "validate and summarize a dataset", false, false, false);
  commands[3]->flags.add<double>(commands[3]->app, "--b", "b", "target value of the correct class");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  for (const auto& c : commands) {
    if (!c->app->parsed()) continue;
    try {
      json doc = c->config.empty() ? json::object() : read_config_file(c->config);
      c->flags.apply(doc);
      return run(c->app->get_name(), config_from_json(doc));
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  return kExitConfig;
}
