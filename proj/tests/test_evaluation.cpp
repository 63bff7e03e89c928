#include "lcor/evaluation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

using namespace lcor;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lcor_eval_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Dataset balanced_gaussians(std::size_t per_class, std::size_t classes, double scale, std::uint64_t seed) {
  std::vector<GaussianClass> spec;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> mean(3, 0.0);
    mean[c % 3] = c < 3 ? 3.0 : -3.0;
    spec.push_back({mean, scale});
  }
  Dataset d = synth_gaussians(per_class, spec, seed);
  d.name = "synthetic";
  return normalize01(std::move(d));
}

TrainerConfig config(Algorithm a, int iterations) {
  TrainerConfig cfg;
  cfg.algorithm = a;
  cfg.iterations = iterations;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_SUITE("folds") {
  TEST_CASE("equal folds give 70/20/10 splits") {
    const FoldPlan plan = make_folds(100, 10, 1);
    for (std::size_t s : plan.fold_sizes()) CHECK(s == 10);
    for (std::size_t f = 0; f < 10; ++f) {
      const auto split = plan.split(f);
      CHECK(split.train.size() == 70);
      CHECK(split.validation.size() == 20);
      CHECK(split.test.size() == 10);
    }
  }

  TEST_CASE("sizes differ by at most one") {
    for (std::size_t n : {101u, 109u, 257u, 10u}) {
      const auto sizes = make_folds(n, 10, 2).fold_sizes();
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      CHECK(*hi - *lo <= 1);
      CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == n);
    }
    const auto sizes = make_folds(101, 10, 2).fold_sizes();
    for (std::size_t s : sizes) CHECK((s == 10 || s == 11));
  }

  TEST_CASE("deterministic per seed") {
    CHECK(make_folds(500, 10, 9).fold_assignment == make_folds(500, 10, 9).fold_assignment);
    CHECK(make_folds(500, 10, 9).fold_assignment != make_folds(500, 10, 10).fold_assignment);
  }

  TEST_CASE("too few patterns") {
    CHECK_THROWS(make_folds(9, 10, 0));
    CHECK_THROWS(make_folds(100, 3, 0));
  }

  TEST_CASE("every fold partitions the patterns") {
    oracle::Gen gen(61);
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = gen.between(10, 300);
      const FoldPlan plan = make_folds(n, 10, rep);
      for (std::size_t f = 0; f < 10; ++f) {
        const auto s = plan.split(f);
        std::vector<int> seen(n, 0);
        for (auto* part : {&s.train, &s.validation, &s.test})
          for (std::size_t p : *part) ++seen[p];
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        for (std::size_t p : s.test) CHECK(plan.fold_assignment[p] == f);
        for (std::size_t p : s.validation) {
          const std::size_t g = plan.fold_assignment[p];
          CHECK((g == (f + 1) % 10 || g == (f + 2) % 10));
        }
      }
    }
  }
}

TEST_SUITE("run_kfold") {
  TEST_CASE("separable data is classified almost perfectly by every algorithm") {
    const Dataset d = balanced_gaussians(40, 3, 0.3, 4);
    const FoldPlan plan = make_folds(d.size(), 10, 5);
    for (Algorithm a : {Algorithm::SCE, Algorithm::MSE_OR, Algorithm::SMSE_OR}) {
      CAPTURE(to_string(a));
      const KFoldResult r = run_kfold(d, config(a, a == Algorithm::MSE_OR ? 10 : 100), plan);
      CHECK(r.average_testing_pe < 2.0);
      CHECK(r.per_fold.size() == 10);
      CHECK_FALSE(r.subset());
    }
  }

  TEST_CASE("an untrained zero-weight classifier sits at chance") {
    const Dataset d = balanced_gaussians(100, 4, 1.0, 6);
    const KFoldResult r = run_kfold(d, config(Algorithm::SCE, 1), make_folds(d.size(), 10, 7));
    CHECK(std::abs(r.average_testing_pe - 75.0) <= 3.0);
    for (const auto& rep : r.per_fold) CHECK(oracle::max_abs(rep.best_weights.matrix()) == 0.0);
  }

  TEST_CASE("means are recomputable from the folds") {
    const Dataset d = balanced_gaussians(30, 3, 1.2, 8);
    const KFoldResult r = run_kfold(d, config(Algorithm::MSE_OR, 5), make_folds(d.size(), 10, 9));
    double pe = 0.0, it = 0.0;
    for (const auto& rep : r.per_fold) {
      pe += rep.final_test_pe;
      it += static_cast<double>(rep.best_val_iteration);
    }
    CHECK(std::abs(r.average_testing_pe - pe / 10.0) < 1e-12);
    CHECK(r.best_average_validation_iteration == it / 10.0);
  }

  TEST_CASE("test error replays from the best weights") {
    const Dataset d = balanced_gaussians(30, 3, 1.2, 10);
    const FoldPlan plan = make_folds(d.size(), 10, 11);
    const KFoldResult r = run_kfold(d, config(Algorithm::SMSE_OR, 20), plan, {2, 1});
    REQUIRE(r.per_fold.size() == 2);
    CHECK(r.subset());
    for (std::size_t i = 0; i < 2; ++i) {
      const AugmentedBatch test = augment(d, plan.split(r.folds[i]).test);
      const double pe = 100.0 * oracle::error_rate(
                                    oracle::scores(r.per_fold[i].best_weights.matrix(), test.patterns), test.labels);
      CHECK(r.per_fold[i].final_test_pe == pe);
    }
  }

  TEST_CASE("parallel folds match sequential folds") {
    const Dataset d = balanced_gaussians(20, 3, 1.0, 12);
    const FoldPlan plan = make_folds(d.size(), 10, 13);
    const KFoldResult a = run_kfold(d, config(Algorithm::SCE, 15), plan, {0, 1});
    const KFoldResult b = run_kfold(d, config(Algorithm::SCE, 15), plan, {0, 4});
    CHECK(a.average_testing_pe == b.average_testing_pe);
    for (std::size_t f = 0; f < 10; ++f) CHECK(a.per_fold[f].loss_history == b.per_fold[f].loss_history);
  }

  TEST_CASE("preconditions") {
    Dataset raw = two_gaussians(20, 1.0, 1);
    CHECK_THROWS(run_kfold(raw, config(Algorithm::SCE, 2), make_folds(raw.size(), 10, 0)));
    const Dataset d = normalize01(raw);
    CHECK_THROWS_AS(run_kfold(d, config(Algorithm::SCE, 2), make_folds(30, 10, 0)), DimensionError);
  }

  TEST_CASE("a failing fold names its index") {
    const Dataset d = balanced_gaussians(10, 3, 1.0, 14);
    TrainerConfig cfg = config(Algorithm::SCE, 2);
    cfg.b = -1.0;
    CHECK_THROWS(run_kfold(d, cfg, make_folds(d.size(), 10, 0)));
    // An empty feature vector only fails once a fold builds its batches.
    Dataset tiny = d;
    tiny.features = Matrix(d.size(), 0);
    CHECK_THROWS_WITH(run_kfold(tiny, config(Algorithm::SCE, 2), make_folds(d.size(), 10, 0)),
                      doctest::Contains("fold 0"));
  }
}

TEST_SUITE("diagnostics") {
  TEST_CASE("exact outputs are all zero-error") {
    const Matrix t = Matrix::from_rows({{1, 0}, {0, 1}});
    const ErrorDiagnostics e = diagnose_errors(t, t, Labels{0, 1}, 3.0);
    CHECK(e.zero_error == 4);
    CHECK(e.consistent == 0);
    CHECK(e.inconsistent == 0);
    CHECK(e.misclassified == 0);
    CHECK(e.max_pattern_bias == 0.0);
  }

  TEST_CASE("overshoot in the safe direction is inconsistent") {
    const ErrorDiagnostics e =
        diagnose_errors(Matrix::from_rows({{1.2, -0.1}}), Matrix::from_rows({{1, 0}}), Labels{0}, 3.0);
    CHECK(e.inconsistent == 2);
    CHECK(e.consistent == 0);
    CHECK(e.pattern_bias[0] == doctest::Approx(0.05));
  }

  TEST_CASE("errors toward the boundary are consistent") {
    const ErrorDiagnostics e =
        diagnose_errors(Matrix::from_rows({{0.5, 0.6}}), Matrix::from_rows({{1, 0}}), Labels{0}, 3.0);
    CHECK(e.consistent == 2);
    CHECK(e.inconsistent == 0);
    CHECK(e.misclassified == 1);
    CHECK(e.per_class[0].misclassified == 1);
  }

  TEST_CASE("outliers follow the threshold") {
    const Matrix y = Matrix::from_rows({{5, 0}, {0.5, 0.5}});
    const Matrix t = Matrix::from_rows({{1, 0}, {1, 0}});
    CHECK(diagnose_errors(y, t, Labels{0, 0}, 3.0).outlier_patterns == 1);
    CHECK(diagnose_errors(y, t, Labels{0, 0}, 3.0).outlier_slots == 1);
    CHECK(diagnose_errors(y, t, Labels{0, 0}, 0.4).outlier_slots == 3);
  }

  TEST_CASE("every slot lands in exactly one bucket") {
    oracle::Gen gen(62);
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t n = gen.between(1, 30);
      const std::size_t m = gen.between(2, 6);
      const Labels labels = gen.labels(n, m);
      const Matrix t = oracle::one_hot(labels, m, 1.0);
      Matrix y = gen.matrix(n, m, -1, 2);
      if (rep % 3 == 0)
        for (double& v : y.values()) v = std::round(v);
      const ErrorDiagnostics e = diagnose_errors(y, t, labels, 1.0);
      CHECK(e.consistent + e.inconsistent + e.zero_error == n * m);
      std::size_t patterns = 0;
      for (const auto& c : e.per_class) patterns += c.patterns;
      CHECK(patterns == n);
      CHECK(e.pattern_bias.size() == n);
      CHECK(e.misclassified == oracle::error_count(y, labels));
    }
  }

  TEST_CASE("shape mismatch") {
    CHECK_THROWS_AS(diagnose_errors(Matrix(2, 2), Matrix(2, 3), Labels{0, 1}, 1.0), DimensionError);
  }
}

TEST_SUITE("emit_results") {
  KFoldResult small_result(std::uint64_t seed) {
    const Dataset d = balanced_gaussians(20, 3, 1.0, seed);
    return run_kfold(d, config(Algorithm::MSE_OR, 3), make_folds(d.size(), 10, seed));
  }

  TEST_CASE("one pair gives a header, a summary row and ten fold rows") {
    TempDir dir;
    ResultTable table;
    table["synthetic"]["mse-or"] = small_result(21);
    const EmittedFiles files = emit_results(table, dir.path);
    std::ifstream in(files.csv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 12);
    CHECK(lines[0] == "dataset,algorithm,kind,fold,average_testing_pe,best_average_validation_iteration");
    CHECK(lines[1].rfind("synthetic,mse-or,summary,all,", 0) == 0);
    CHECK(files.histories.size() == 10);
    CHECK(fs::exists(files.summary));
    CHECK(slurp(files.summary).find("of 10 folds") == std::string::npos);
  }

  TEST_CASE("CSV round-trips bit-exactly") {
    TempDir dir;
    ResultTable table;
    const KFoldResult r = small_result(22);
    table["synthetic"]["mse-or"] = r;
    const auto rows = read_results_csv(emit_results(table, dir.path).csv);
    REQUIRE(rows.size() == 11);
    CHECK(rows[0].kind == "summary");
    CHECK(rows[0].average_testing_pe == r.average_testing_pe);
    CHECK(rows[0].best_average_validation_iteration == r.best_average_validation_iteration);
    double sum = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].kind == "fold");
      CHECK(rows[i].average_testing_pe == r.per_fold[i - 1].final_test_pe);
      sum += rows[i].average_testing_pe;
    }
    CHECK(std::abs(sum / 10.0 - rows[0].average_testing_pe) < 1e-12);
  }

  TEST_CASE("reruns produce identical bytes") {
    TempDir a, b;
    ResultTable t1, t2;
    t1["synthetic"]["mse-or"] = small_result(23);
    t2["synthetic"]["mse-or"] = small_result(23);
    CHECK(slurp(emit_results(t1, a.path).csv) == slurp(emit_results(t2, b.path).csv));
  }

  TEST_CASE("subset runs are flagged in the summary") {
    TempDir dir;
    const Dataset d = balanced_gaussians(20, 3, 1.0, 24);
    ResultTable table;
    table["synthetic"]["sce"] = run_kfold(d, config(Algorithm::SCE, 3), make_folds(d.size(), 10, 1), {1, 1});
    const EmittedFiles files = emit_results(table, dir.path);
    CHECK(slurp(files.summary).find("(1 of 10 folds)") != std::string::npos);
    const std::string hist = slurp(files.histories.at(0));
    CHECK(hist.rfind("iteration,loss,train_pe,val_pe\n", 0) == 0);
  }

  TEST_CASE("empty table") {
    TempDir dir;
    CHECK_THROWS_WITH(emit_results({}, dir.path), doctest::Contains("no results"));
    ResultTable empty_inner;
    empty_inner["x"];
    CHECK_THROWS_WITH(emit_results(empty_inner, dir.path), doctest::Contains("no results"));
  }
}
