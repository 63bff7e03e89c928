#include "lcor/classifier.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace lcor;

namespace {

Dataset make_dataset(Matrix features, Labels labels, std::size_t classes) {
  Dataset d;
  d.features = std::move(features);
  d.labels = std::move(labels);
  d.num_classes = classes;
  return d;
}

}  // namespace

TEST_SUITE("augment") {
  TEST_CASE("prepends the constant and builds scaled one-hot targets") {
    const Dataset d = make_dataset(Matrix::from_rows({{0.5, 0.25}}), {1}, 2);
    const AugmentedBatch b = augment(d, 1.0);
    CHECK(b.patterns == Matrix::from_rows({{1, 0.5, 0.25}}));
    CHECK(b.targets == Matrix::from_rows({{0, 1}}));
    CHECK(b.num_basis() == 3);
    CHECK(b.num_classes() == 2);

    const AugmentedBatch scaled = augment(d, 2.5);
    CHECK(scaled.targets == Matrix::from_rows({{0, 2.5}}));
    CHECK(scaled.b == 2.5);
  }

  TEST_CASE("empty feature vector is rejected") {
    const Dataset d = make_dataset(Matrix(1, 0), {0}, 2);
    CHECK_THROWS_WITH(augment(d), doctest::Contains("empty feature vector"));
  }

  TEST_CASE("targets are unit vectors") {
    const Dataset d = make_dataset(Matrix(3, 1, 0.5), {0, 2, 1}, 3);
    const AugmentedBatch b = augment(d);
    CHECK(b.targets == Matrix::from_rows({{1, 0, 0}, {0, 0, 1}, {0, 1, 0}}));
  }

  TEST_CASE("out-of-range label names its row") {
    const Dataset d = make_dataset(Matrix(3, 1, 0.5), {0, 1, 7}, 3);
    CHECK_THROWS_WITH_AS(augment(d), doctest::Contains("row 2"), std::out_of_range);
  }

  TEST_CASE("non-positive b is rejected") {
    const Dataset d = make_dataset(Matrix(1, 1, 0.5), {0}, 2);
    CHECK_THROWS(augment(d, 0.0));
  }

  TEST_CASE("row subsets keep their order") {
    const Dataset d = make_dataset(Matrix::from_rows({{1}, {2}, {3}}), {0, 1, 0}, 2);
    const std::vector<std::size_t> rows = {2, 0};
    const AugmentedBatch b = augment(d, rows);
    CHECK(b.patterns == Matrix::from_rows({{1, 3}, {1, 1}}));
    CHECK(b.labels == Labels{0, 0});
  }

  TEST_CASE("augmented column is always exactly one") {
    oracle::Gen gen(3);
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = gen.between(1, 30);
      const std::size_t m = gen.between(2, 6);
      const Dataset d = make_dataset(gen.matrix(n, gen.between(1, 9)), gen.labels(n, m), m);
      const AugmentedBatch b = augment(d);
      for (std::size_t p = 0; p < n; ++p) {
        CHECK(b.patterns(p, 0) == 1.0);
        double row_sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) row_sum += b.targets(p, i);
        CHECK(row_sum == 1.0);
        CHECK(b.targets(p, d.labels[p]) == 1.0);
      }
    }
  }
}

TEST_SUITE("forward") {
  TEST_CASE("direct arithmetic") {
    const WeightMatrix w(Matrix::from_rows({{0.5, 1.0}, {0, -1}}));
    const Discriminants y = forward(w, Matrix::from_rows({{1, 2}}));
    CHECK(y.y == Matrix::from_rows({{2.5, -2}}));
  }

  TEST_CASE("zero weights give zero outputs") {
    oracle::Gen gen(4);
    const Matrix x = gen.augmented(10, 4);
    const Discriminants y = forward(WeightMatrix::zeros(3, 5), x);
    CHECK(oracle::max_abs(y.y) == 0.0);
  }

  TEST_CASE("matches the loop oracle") {
    oracle::Gen gen(5);
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix x = gen.augmented(gen.between(1, 40), gen.between(1, 10));
      const WeightMatrix w(gen.matrix(gen.between(2, 6), x.cols()));
      CHECK(oracle::max_abs_diff(forward(w, x).y, oracle::scores(w.matrix(), x)) < 1e-14);
    }
  }

  TEST_CASE("shape mismatch") {
    CHECK_THROWS_AS(forward(WeightMatrix::zeros(2, 3), Matrix(4, 2)), DimensionError);
  }

  TEST_CASE("weights must be finite") {
    Matrix m(1, 1);
    m(0, 0) = std::nan("");
    CHECK_THROWS(WeightMatrix(std::move(m)));
  }
}

TEST_SUITE("predict") {
  TEST_CASE("argmax with lowest-index ties") {
    CHECK(predict({Matrix::from_rows({{0.2, 0.9}})}) == Labels{1});
    CHECK(predict({Matrix::from_rows({{0.5, 0.5}})}) == Labels{0});
    CHECK(predict({Matrix::from_rows({{-3, -1, -2}})}) == Labels{1});
    CHECK(predict({Matrix::from_rows({{1, 3, 3}})}) == Labels{1});
  }

  TEST_CASE("needs two classes") { CHECK_THROWS(predict({Matrix(1, 1)})); }

  TEST_CASE("invariant under per-row shifts and positive scaling") {
    oracle::Gen gen(6);
    for (int rep = 0; rep < 200; ++rep) {
      const std::size_t n = gen.between(1, 10);
      const std::size_t m = gen.between(2, 8);
      const Matrix y = gen.matrix(n, m, -5, 5);
      const Labels base = predict({y});
      Matrix shifted = y;
      for (std::size_t p = 0; p < n; ++p) {
        const double a = gen.uniform(-100, 100);
        for (double& v : shifted.row(p)) v += a;
      }
      // Shifting may round; check only rows whose margin survives rounding.
      const Labels after = predict({shifted});
      for (std::size_t p = 0; p < n; ++p) {
        double second = -1e300;
        for (std::size_t i = 0; i < m; ++i)
          if (i != base[p]) second = std::max(second, y(p, i));
        if (y(p, base[p]) - second > 1e-9) CHECK(after[p] == base[p]);
      }
      const double c = gen.uniform(0.01, 100);
      CHECK(predict({c * y}) == base);
    }
  }
}

TEST_SUITE("classification_error") {
  TEST_CASE("basic counts") {
    CHECK(classification_error(Labels{0, 1, 2}, Labels{0, 1, 2}) == 0.0);
    CHECK(classification_error(Labels{1, 0}, Labels{0, 1}) == 1.0);
    CHECK(classification_error(Labels{0, 1, 1, 1}, Labels{0, 1, 1, 0}) == 0.25);
  }

  TEST_CASE("errors") {
    CHECK_THROWS(classification_error(Labels{0}, Labels{0, 1}));
    CHECK_THROWS(classification_error(Labels{}, Labels{}));
  }

  TEST_CASE("bounded on random inputs") {
    oracle::Gen gen(7);
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t n = gen.between(1, 50);
      const double e = classification_error(gen.labels(n, 4), gen.labels(n, 4));
      CHECK(e >= 0.0);
      CHECK(e <= 1.0);
    }
  }
}
