#include "lcor/cli.hpp"

#include "lcor/output_reset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <type_traits>

namespace lcor::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kKeys = {
    "dataset",   "data_root",     "images",          "labels",           "normalize",
    "limit",     "synth_classes", "synth_features",  "synth_per_class",  "synth_scale",
    "algo",      "or_variant",    "iters",           "or_inner_iterations", "b",
    "seed",      "out",           "folds_run",       "folds",            "jobs",
    "batch_size", "olf",          "mse_delta",       "halt_on_zero_risk", "train_fraction",
    "val_fraction", "weights",    "targets",         "outlier_threshold",
};

std::string to_string(NormalizeMode m) {
  switch (m) {
    case NormalizeMode::Auto: return "auto";
    case NormalizeMode::Byte255: return "byte255";
    case NormalizeMode::MinMax: return "minmax";
  }
  return "auto";
}

NormalizeMode parse_normalize(const std::string& s) {
  if (s == "auto") return NormalizeMode::Auto;
  if (s == "byte255") return NormalizeMode::Byte255;
  if (s == "minmax") return NormalizeMode::MinMax;
  throw ConfigError("unknown normalize mode '" + s + "' (auto|byte255|minmax)");
}

std::vector<Algorithm> parse_algorithms(const std::string& s) {
  if (s == "all") return {Algorithm::SCE, Algorithm::MSE_OR, Algorithm::SMSE_OR};
  std::vector<Algorithm> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = std::min(s.find(',', start), s.size());
    out.push_back(parse_algorithm(s.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

template <class T>
T get(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    const bool ok = v.is_number_integer() &&
                    (!std::is_unsigned_v<T> || v.is_number_unsigned() || v.get<std::int64_t>() >= 0);
    if (!ok) {
      throw ConfigError(std::string("config key '") + key + "' must be " +
                        (std::is_unsigned_v<T> ? "a non-negative integer" : "an integer"));
    }
  }
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

template <class T>
void read_opt(const json& doc, const char* key, T& dst) {
  if (doc.contains(key)) dst = get<T>(doc, key);
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ConfigError(what + " not found: " + p.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

fs::path prepare_out(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
  return dir;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t seed_of(const RunConfig& cfg) {
  if (!cfg.seed) throw std::logic_error("seed must be resolved before running a command");
  return *cfg.seed;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Dataset load_raw(const DatasetSpec& spec, std::uint64_t seed) {
  if (!spec.images.empty() || !spec.labels.empty() || spec.name == "idx") {
    if (spec.images.empty() || spec.labels.empty()) throw ConfigError("idx input needs both --images and --labels");
    require_file(spec.images, "image file");
    require_file(spec.labels, "label file");
    Dataset d = load_idx(spec.images, spec.labels);
    d.name = spec.name.empty() ? "idx" : spec.name;
    return d;
  }
  if (spec.name == "two-gaussians") {
    Dataset d = two_gaussians(spec.synth_per_class, spec.synth_scale, seed);
    d.name = spec.name;
    return d;
  }
  if (spec.name == "synthetic") {
    if (spec.synth_classes < 2 || spec.synth_features < 1 || spec.synth_per_class < 1) {
      throw ConfigError("synthetic data needs >= 2 classes, >= 1 feature and >= 1 pattern per class");
    }
    std::mt19937_64 rng(seed ^ 0x5eedULL);
    std::uniform_real_distribution<double> centre(-1.5, 1.5);
    std::vector<GaussianClass> classes(spec.synth_classes);
    for (auto& c : classes) {
      c.scale = spec.synth_scale;
      c.mean.resize(spec.synth_features);
      for (double& v : c.mean) v = centre(rng);
    }
    Dataset d = synth_gaussians(spec.synth_per_class, classes, seed);
    d.name = spec.name;
    return d;
  }
  if (spec.name == "mnist" || spec.name == "fashion-mnist" || spec.name == "cifar10") {
    const fs::path root = spec.data_root.empty() ? data_root_from_env() : spec.data_root;
    if (root.empty()) {
      throw ConfigError("dataset '" + spec.name + "' needs --data-root or LCOR_DATA_ROOT");
    }
    if (spec.name == "cifar10") {
      require_file(root / "cifar-10-batches-bin" / "data_batch_1.bin", "dataset file");
    } else {
      require_file(root / spec.name / "train-images-idx3-ubyte", "dataset file");
      require_file(root / spec.name / "train-labels-idx1-ubyte", "dataset file");
    }
    try {
      return load_named(spec.name, root);
    } catch (const FormatError& e) {
      if (e.issue() == FormatIssue::Unreadable) throw ConfigError(e.what());
      throw;
    }
  }
  if (spec.name.empty()) throw ConfigError("no dataset given (--dataset)");
  throw ConfigError("unknown dataset '" + spec.name +
                    "' (mnist|fashion-mnist|cifar10|idx|synthetic|two-gaussians)");
}

TrainerConfig trainer_for(const RunConfig& cfg, Algorithm a) {
  TrainerConfig t = cfg.trainer;
  t.algorithm = a;
  t.seed = seed_of(cfg);
  return t;
}

void write_history(const TrainingReport& r, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "iteration,loss,train_pe,val_pe,step\n";
  for (std::size_t k = 0; k < r.loss_history.size(); ++k) {
    out << k << ',' << exact(r.loss_history[k]) << ',' << exact(100.0 * r.train_pe_history[k]) << ','
        << exact(100.0 * r.val_pe_history[k]) << ',' << exact(r.step_history[k]) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json class_json(const ClassDiagnostics& c) {
  return {{"patterns", c.patterns},         {"misclassified", c.misclassified},
          {"consistent", c.consistent},     {"inconsistent", c.inconsistent},
          {"zero_error", c.zero_error},     {"outlier_slots", c.outlier_slots}};
}

json bias_distribution(std::vector<double> bias) {
  json out = json::object();
  if (bias.empty()) return out;
  std::sort(bias.begin(), bias.end());
  auto quantile = [&](double q) {
    return bias[static_cast<std::size_t>(std::floor(q * static_cast<double>(bias.size() - 1)))];
  };
  out["min"] = bias.front();
  out["median"] = quantile(0.5);
  out["p90"] = quantile(0.9);
  out["p99"] = quantile(0.99);
  out["max"] = bias.back();
  constexpr std::size_t kBins = 10;
  std::vector<std::size_t> counts(kBins, 0);
  const double top = bias.back();
  for (double v : bias) {
    const std::size_t bin =
        top > 0.0 ? std::min(kBins - 1, static_cast<std::size_t>(v / top * kBins)) : 0;
    ++counts[bin];
  }
  out["histogram_upper_edge"] = top;
  out["histogram"] = counts;
  return out;
}

}  // namespace

RunConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a flat JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    if (value.is_object() || value.is_array()) throw ConfigError("config key '" + key + "' must be a scalar");
  }

  RunConfig cfg;
  DatasetSpec& ds = cfg.dataset;
  read_opt(doc, "dataset", ds.name);
  if (doc.contains("data_root")) ds.data_root = get<std::string>(doc, "data_root");
  if (doc.contains("images")) ds.images = get<std::string>(doc, "images");
  if (doc.contains("labels")) ds.labels = get<std::string>(doc, "labels");
  if (doc.contains("normalize")) ds.normalize = parse_normalize(get<std::string>(doc, "normalize"));
  read_opt(doc, "limit", ds.limit);
  read_opt(doc, "synth_classes", ds.synth_classes);
  read_opt(doc, "synth_features", ds.synth_features);
  read_opt(doc, "synth_per_class", ds.synth_per_class);
  read_opt(doc, "synth_scale", ds.synth_scale);

  TrainerConfig& tc = cfg.trainer;
  try {
    if (doc.contains("algo")) {
      cfg.algorithms = parse_algorithms(get<std::string>(doc, "algo"));
      tc.algorithm = cfg.algorithms.front();
    }
    if (doc.contains("or_variant")) tc.or_variant = parse_or_variant(get<std::string>(doc, "or_variant"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (doc.contains("iters")) tc.iterations = get<int>(doc, "iters");
  read_opt(doc, "or_inner_iterations", tc.or_inner_iterations);
  read_opt(doc, "b", tc.b);
  read_opt(doc, "batch_size", tc.batch_size);
  read_opt(doc, "halt_on_zero_risk", tc.halt_on_zero_risk);
  if (doc.contains("olf")) {
    const auto s = get<std::string>(doc, "olf");
    if (s == "second-order") {
      tc.line_search.mode = OlfMode::SecondOrder;
    } else if (s == "backtracking") {
      tc.line_search.mode = OlfMode::Backtracking;
    } else {
      throw ConfigError("unknown olf mode '" + s + "' (second-order|backtracking)");
    }
  }
  if (doc.contains("mse_delta")) {
    const auto s = get<std::string>(doc, "mse_delta");
    if (s == "per-output") {
      tc.mse_delta_form = MseDeltaForm::PerOutput;
    } else if (s == "summed") {
      tc.mse_delta_form = MseDeltaForm::LiteralSummed;
    } else {
      throw ConfigError("unknown mse_delta form '" + s + "' (per-output|summed)");
    }
  }

  if (doc.contains("seed")) cfg.seed = get<std::uint64_t>(doc, "seed");
  if (doc.contains("out")) cfg.out = get<std::string>(doc, "out");
  read_opt(doc, "folds_run", cfg.folds_run);
  read_opt(doc, "folds", cfg.folds);
  read_opt(doc, "jobs", cfg.jobs);
  read_opt(doc, "train_fraction", cfg.train_fraction);
  read_opt(doc, "val_fraction", cfg.val_fraction);
  if (doc.contains("weights")) cfg.weights = get<std::string>(doc, "weights");
  read_opt(doc, "targets", cfg.targets);
  if (doc.contains("outlier_threshold")) cfg.outlier_threshold = get<double>(doc, "outlier_threshold");

  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (cfg.folds < 4) throw ConfigError("folds must be >= 4");
  if (cfg.folds_run > cfg.folds) throw ConfigError("folds_run exceeds folds");
  if (!(cfg.train_fraction > 0.0) || !(cfg.val_fraction > 0.0) || cfg.train_fraction + cfg.val_fraction >= 1.0) {
    throw ConfigError("train_fraction and val_fraction must be positive and sum below 1");
  }
  static const std::set<std::string> kTargets = {"raw", "classic", "type2", "pe"};
  if (!kTargets.contains(cfg.targets)) throw ConfigError("unknown targets '" + cfg.targets + "' (raw|classic|type2|pe)");
  if (cfg.outlier_threshold && !(*cfg.outlier_threshold > 0.0)) throw ConfigError("outlier_threshold must be positive");
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json doc;
  const DatasetSpec& ds = cfg.dataset;
  doc["dataset"] = ds.name;
  if (!ds.data_root.empty()) doc["data_root"] = ds.data_root.string();
  if (!ds.images.empty()) doc["images"] = ds.images.string();
  if (!ds.labels.empty()) doc["labels"] = ds.labels.string();
  doc["normalize"] = to_string(ds.normalize);
  doc["limit"] = ds.limit;
  if (ds.name == "synthetic" || ds.name == "two-gaussians") {
    doc["synth_classes"] = ds.synth_classes;
    doc["synth_features"] = ds.synth_features;
    doc["synth_per_class"] = ds.synth_per_class;
    doc["synth_scale"] = ds.synth_scale;
  }
  std::string algos;
  for (Algorithm a : cfg.algorithms.empty() ? std::vector<Algorithm>{cfg.trainer.algorithm} : cfg.algorithms) {
    algos += (algos.empty() ? "" : ",") + lcor::to_string(a);
  }
  doc["algo"] = algos;
  doc["or_variant"] = lcor::to_string(cfg.trainer.or_variant);
  if (cfg.trainer.iterations) doc["iters"] = *cfg.trainer.iterations;
  doc["or_inner_iterations"] = cfg.trainer.or_inner_iterations;
  doc["b"] = cfg.trainer.b;
  doc["batch_size"] = cfg.trainer.batch_size;
  doc["halt_on_zero_risk"] = cfg.trainer.halt_on_zero_risk;
  doc["olf"] = cfg.trainer.line_search.mode == OlfMode::SecondOrder ? "second-order" : "backtracking";
  doc["mse_delta"] = cfg.trainer.mse_delta_form == MseDeltaForm::PerOutput ? "per-output" : "summed";
  if (cfg.seed) doc["seed"] = *cfg.seed;
  doc["out"] = cfg.out.string();
  doc["folds_run"] = cfg.folds_run;
  doc["folds"] = cfg.folds;
  doc["jobs"] = cfg.jobs;
  doc["train_fraction"] = cfg.train_fraction;
  doc["val_fraction"] = cfg.val_fraction;
  if (!cfg.weights.empty()) doc["weights"] = cfg.weights.string();
  doc["targets"] = cfg.targets;
  if (cfg.outlier_threshold) doc["outlier_threshold"] = *cfg.outlier_threshold;
  return doc;
}

json read_config_file(const fs::path& path) {
  require_file(path, "config file");
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

RunConfig with_seed(RunConfig cfg) {
  if (!cfg.seed) {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  return cfg;
}

Dataset load_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  Dataset d = load_raw(spec, seed);
  if (spec.limit > 0 && spec.limit < d.size()) {
    auto rows = seeded_permutation(d.size(), seed ^ 0x9e3779b97f4a7c15ULL);
    rows.resize(spec.limit);
    std::sort(rows.begin(), rows.end());
    const std::string name = d.name;
    d = d.subset(rows);
    d.name = name;
  }
  d.validate();
  return normalize01(std::move(d), spec.normalize);
}

void write_weights(const WeightMatrix& w, const RunConfig& cfg, const fs::path& path) {
  json rows = json::array();
  for (std::size_t i = 0; i < w.classes(); ++i) {
    auto r = w.matrix().row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  json doc = {{"format", "lcor-weights"},
              {"algorithm", lcor::to_string(cfg.trainer.algorithm)},
              {"b", cfg.trainer.b},
              {"classes", w.classes()},
              {"basis", w.basis()},
              {"weights", rows}};
  write_json(path, doc);
}

LoadedWeights read_weights(const fs::path& path) {
  require_file(path, "weights file");
  std::ifstream in(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("weights file " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    if (doc.at("format") != "lcor-weights") throw ConfigError("weights file " + path.string() + " has an unknown format");
    const auto classes = doc.at("classes").get<std::size_t>();
    const auto basis = doc.at("basis").get<std::size_t>();
    const auto rows = doc.at("weights").get<std::vector<std::vector<double>>>();
    if (rows.size() != classes) {
      throw ConfigError("weights file " + path.string() + " declares " + std::to_string(classes) +
                        " classes but holds " + std::to_string(rows.size()) + " rows");
    }
    std::vector<double> flat;
    for (const auto& r : rows) {
      if (r.size() != basis) {
        throw ConfigError("weights file " + path.string() + " has a row of length " + std::to_string(r.size()) +
                          ", expected " + std::to_string(basis));
      }
      flat.insert(flat.end(), r.begin(), r.end());
    }
    LoadedWeights out;
    out.w = WeightMatrix(Matrix(classes, basis, std::move(flat)));
    out.algorithm = parse_algorithm(doc.at("algorithm").get<std::string>());
    out.b = doc.at("b").get<double>();
    return out;
  } catch (const json::exception& e) {
    throw ConfigError("weights file " + path.string() + " is malformed: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("weights file " + path.string() + " is malformed: " + e.what());
  }
}

TrainOutcome cmd_train(const RunConfig& cfg_in) {
  const RunConfig cfg = with_seed(cfg_in);
  const std::uint64_t seed = seed_of(cfg);
  const Dataset d = load_dataset(cfg.dataset, seed);

  const std::size_t n = d.size();
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw ConfigError("dataset of " + std::to_string(n) + " patterns is too small for the requested split");
  }
  const auto order = seeded_permutation(n, seed);
  const std::vector<std::size_t> train_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<std::size_t> val_rows(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                                          order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  const std::vector<std::size_t> test_rows(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());

  const TrainerConfig tc = trainer_for(cfg, cfg.trainer.algorithm);
  const AugmentedBatch train_set = augment(d, train_rows, tc.b);
  const AugmentedBatch val_set = augment(d, val_rows, tc.b);
  const AugmentedBatch test_set = augment(d, test_rows, tc.b);

  TrainOutcome out;
  out.seed = seed;
  out.report = train(train_set, val_set, tc);
  out.test_pe = 100.0 * classification_error(predict(forward(out.report.best_weights, test_set)), test_set.labels);
  out.report.final_test_pe = out.test_pe;

  const fs::path dir = prepare_out(cfg.out);
  out.history_csv = dir / "history.csv";
  out.weights_json = dir / "weights.json";
  out.final_weights_json = dir / "final_weights.json";
  out.report_json = dir / "report.json";
  write_history(out.report, out.history_csv);
  RunConfig record = cfg;
  record.trainer.algorithm = tc.algorithm;
  write_weights(out.report.best_weights, record, out.weights_json);
  write_weights(out.report.final_weights, record, out.final_weights_json);

  const TrainingReport& r = out.report;
  json report = {
      {"command", "train"},
      {"config", config_to_json(record)},
      {"seed", seed},
      {"dataset", d.name},
      {"algorithm", lcor::to_string(tc.algorithm)},
      {"split", {{"train", train_rows.size()}, {"validation", val_rows.size()}, {"test", test_rows.size()}}},
      {"iterations_run", r.iterations_run()},
      {"best_val_iteration", r.best_val_iteration},
      {"best_val_pe", 100.0 * r.val_pe_history[r.best_val_iteration]},
      {"final_loss", r.loss_history.back()},
      {"final_train_pe", 100.0 * r.train_pe_history.back()},
      {"test_pe", out.test_pe},
      {"halted_zero_risk", r.halted_zero_risk},
      {"stall_iterations", r.stall_iterations},
      {"history", out.history_csv.filename().string()},
      {"weights", out.weights_json.filename().string()},
      {"final_weights", out.final_weights_json.filename().string()},
  };
  write_json(out.report_json, report);
  return out;
}

KFoldOutcome cmd_kfold(const RunConfig& cfg_in) {
  const RunConfig cfg = with_seed(cfg_in);
  const std::uint64_t seed = seed_of(cfg);
  const Dataset d = load_dataset(cfg.dataset, seed);
  if (d.size() < cfg.folds) {
    throw ConfigError("dataset of " + std::to_string(d.size()) + " patterns cannot fill " +
                      std::to_string(cfg.folds) + " folds");
  }
  const FoldPlan plan = make_folds(d.size(), cfg.folds, seed);
  const std::vector<Algorithm> algos =
      cfg.algorithms.empty() ? std::vector<Algorithm>{cfg.trainer.algorithm} : cfg.algorithms;

  KFoldOutcome out;
  out.seed = seed;
  KFoldOptions opts;
  opts.folds_to_run = cfg.folds_run;
  opts.jobs = cfg.jobs;
  json summary = json::array();
  for (Algorithm a : algos) {
    KFoldResult r = run_kfold(d, trainer_for(cfg, a), plan, opts);
    summary.push_back({{"algorithm", r.algorithm},
                       {"average_testing_pe", r.average_testing_pe},
                       {"best_average_validation_iteration", r.best_average_validation_iteration},
                       {"folds_run", r.per_fold.size()}});
    out.results[d.name][r.algorithm] = std::move(r);
  }
  const fs::path dir = prepare_out(cfg.out);
  out.files = emit_results(out.results, dir);
  out.run_json = dir / "run.json";
  const std::size_t ran = cfg.folds_run == 0 ? cfg.folds : cfg.folds_run;
  write_json(out.run_json, {{"command", "kfold"},
                            {"config", config_to_json(cfg)},
                            {"seed", seed},
                            {"dataset", d.name},
                            {"patterns", d.size()},
                            {"folds_total", cfg.folds},
                            {"folds_run", ran},
                            {"subset", ran != cfg.folds},
                            {"fold_sizes", plan.fold_sizes()},
                            {"results", summary}});
  return out;
}

ErrorDiagnostics cmd_diagnose(const RunConfig& cfg_in) {
  const RunConfig cfg = with_seed(cfg_in);
  if (cfg.weights.empty()) throw ConfigError("diagnose needs --weights");
  const LoadedWeights lw = read_weights(cfg.weights);
  const Dataset d = load_dataset(cfg.dataset, seed_of(cfg));

  const std::size_t want_m = d.num_classes;
  const std::size_t want_u = d.num_features() + 1;
  if (lw.w.classes() != want_m || lw.w.basis() != want_u) {
    throw ConfigError("weights file " + cfg.weights.string() + " has shape " + lw.w.matrix().shape() +
                      ", expected " + std::to_string(want_m) + "x" + std::to_string(want_u) + " for dataset " +
                      d.name);
  }
  const AugmentedBatch batch = augment(d, lw.b);
  Matrix y = forward(lw.w, batch).y;
  const bool sigmoid_space = lw.algorithm == Algorithm::SMSE_OR;
  if (sigmoid_space) y = sigmoid(y);

  Matrix t = batch.targets;
  if (cfg.targets != "raw") {
    t = output_reset(parse_or_variant(cfg.targets), y, batch.targets, batch.labels, lw.b,
                     cfg.trainer.or_inner_iterations)
            .t_prime;
  }
  const double threshold = cfg.outlier_threshold.value_or(3.0 * lw.b);
  ErrorDiagnostics diag = diagnose_errors(y, t, batch.labels, threshold);

  json per_class = json::array();
  for (const auto& c : diag.per_class) per_class.push_back(class_json(c));
  const fs::path dir = prepare_out(cfg.out);
  write_json(dir / "diagnostics.json",
             {{"command", "diagnose"},
              {"config", config_to_json(cfg)},
              {"seed", seed_of(cfg)},
              {"dataset", d.name},
              {"weights_algorithm", lcor::to_string(lw.algorithm)},
              {"output_space", sigmoid_space ? "sigmoid" : "linear"},
              {"targets", cfg.targets},
              {"patterns", diag.num_patterns},
              {"classes", diag.num_classes},
              {"misclassified", diag.misclassified},
              {"pe", 100.0 * static_cast<double>(diag.misclassified) / static_cast<double>(diag.num_patterns)},
              {"consistent", diag.consistent},
              {"inconsistent", diag.inconsistent},
              {"zero_error", diag.zero_error},
              {"outlier_threshold", diag.outlier_threshold},
              {"outlier_slots", diag.outlier_slots},
              {"outlier_patterns", diag.outlier_patterns},
              {"pattern_bias_mean", diag.mean_pattern_bias},
              {"pattern_bias", bias_distribution(diag.pattern_bias)},
              {"per_class", per_class}});
  return diag;
}

LemmaFiles cmd_demo_lemmas(const RunConfig& cfg_in) {
  const RunConfig cfg = with_seed(cfg_in);
  const double b = cfg.trainer.b;
  const fs::path dir = prepare_out(cfg.out);

  // Pattern 0 is swept; pattern 1 keeps a fixed consistent error so E_o > 0.
  const Labels labels = {0, 0};
  const Matrix t = Matrix::from_rows({{b, 0.0, 0.0}, {b, 0.0, 0.0}});
  const Matrix base = Matrix::from_rows({{b, 0.0, 0.0}, {0.5 * b, 0.2 * b, 0.1 * b}});
  auto e_prime = [&](const Matrix& y) { return adjusted_mse(y, or_type2(y, t, labels)).value; };
  const double e_o = e_prime(base);
  const double sweep[] = {-1e6, -1e3, -10.0, 10.0, 1e3, 1e6};
  struct Slot {
    const char* name;
    std::size_t index;
  };
  const Slot slots[] = {{"i_c", 0}, {"i_d", 1}};

  LemmaFiles files{dir / "mse_limits.csv", dir / "type2_limits.csv", dir / "two_class_scenario.csv",
                   dir / "two_class_weights.csv"};
  std::ofstream l1 = open_out(files.mse_limits);
  std::ofstream l2 = open_out(files.type2_limits);
  l1 << "slot,y,E\n";
  l2 << "slot,y,E_prime,E_o,expected_limit\n";
  for (const Slot& s : slots) {
    for (double v : sweep) {
      Matrix y = base;
      y(0, s.index) = v;
      l1 << s.name << ',' << exact(v) << ',' << exact(mse(y, t).value) << '\n';
      const bool bounded = (s.index == 0) == (v > 0.0);
      l2 << s.name << ',' << exact(v) << ',' << exact(e_prime(y)) << ',' << exact(e_o) << ','
         << (bounded ? "E_o" : "inf") << '\n';
    }
  }

  // Two classes, two features: plain MSE against LC-OR on the same patterns.
  const Dataset d = two_gaussians(50, 0.8, seed_of(cfg));
  const AugmentedBatch batch = augment(d, b);
  TrainerConfig plain;
  plain.algorithm = Algorithm::MSE_OR;
  plain.or_variant = OrVariant::None;
  plain.iterations = 1;
  plain.b = b;
  TrainerConfig reset = plain;
  reset.or_variant = OrVariant::Classic;
  reset.iterations = 10;
  const WeightMatrix w_mse = train_lc_or(batch, batch, plain).final_weights;
  const WeightMatrix w_or = train_lc_or(batch, batch, reset).final_weights;
  const Matrix y_mse = forward(w_mse, batch).y;
  const Matrix y_or = forward(w_or, batch).y;

  std::ofstream sc = open_out(files.scenario);
  sc << "x1,x2,label,y_mse_1,y_mse_2,y_or_1,y_or_2\n";
  for (std::size_t p = 0; p < d.size(); ++p) {
    sc << exact(d.features(p, 0)) << ',' << exact(d.features(p, 1)) << ',' << d.labels[p] << ','
       << exact(y_mse(p, 0)) << ',' << exact(y_mse(p, 1)) << ',' << exact(y_or(p, 0)) << ','
       << exact(y_or(p, 1)) << '\n';
  }
  std::ofstream sw = open_out(files.scenario_weights);
  sw << "model,class,w0,w1,w2\n";
  for (const auto& [name, w] : {std::pair{"mse", &w_mse}, std::pair{"lc-or", &w_or}}) {
    for (std::size_t i = 0; i < w->classes(); ++i) {
      sw << name << ',' << i << ',' << exact(w->matrix()(i, 0)) << ',' << exact(w->matrix()(i, 1)) << ','
         << exact(w->matrix()(i, 2)) << '\n';
    }
  }
  if (!l1 || !l2 || !sc || !sw) throw std::runtime_error("failed writing lemma tables to " + dir.string());
  return files;
}

fs::path cmd_prepare_data(const RunConfig& cfg_in) {
  const RunConfig cfg = with_seed(cfg_in);
  const Dataset raw = load_raw(cfg.dataset, seed_of(cfg));
  raw.validate();
  const std::size_t kept = cfg.dataset.limit > 0 ? std::min(cfg.dataset.limit, raw.size()) : raw.size();

  std::vector<std::size_t> counts(raw.num_classes, 0);
  for (Label l : raw.labels) ++counts[l];
  double lo = 0.0, hi = 0.0;
  if (!raw.features.empty()) {
    const auto v = raw.features.values();
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    lo = *mn;
    hi = *mx;
  }
  const fs::path path = prepare_out(cfg.out) / "dataset.json";
  write_json(path, {{"command", "prepare-data"},
                    {"config", config_to_json(cfg)},
                    {"seed", seed_of(cfg)},
                    {"dataset", raw.name},
                    {"patterns", raw.size()},
                    {"patterns_after_limit", kept},
                    {"features", raw.num_features()},
                    {"classes", raw.num_classes},
                    {"class_counts", counts},
                    {"byte_valued", raw.byte_valued},
                    {"raw_min", lo},
                    {"raw_max", hi},
                    {"normalize", to_string(cfg.dataset.normalize)}});
  return path;
}

}  // namespace lcor::cli
