#include "lcor/classifier.hpp"
#include "lcor/datasets.hpp"
#include "lcor/linalg.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <vector>

using namespace lcor;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lcor_ds_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>(v >> s));
}

// Two 2x2 images built byte by byte, independent of the library writer.
void write_fixture(const fs::path& images, const fs::path& labels) {
  std::vector<unsigned char> img;
  be32(img, 0x803);
  be32(img, 2);
  be32(img, 2);
  be32(img, 2);
  for (unsigned char v : {0, 1, 254, 255, 10, 20, 30, 40}) img.push_back(v);
  std::vector<unsigned char> lab;
  be32(lab, 0x801);
  be32(lab, 2);
  lab.push_back(3);
  lab.push_back(7);
  write_bytes(images, img);
  write_bytes(labels, lab);
}

Dataset random_bytes(oracle::Gen& gen, std::size_t n, std::size_t features, std::size_t classes) {
  Dataset d;
  d.features = Matrix(n, features);
  for (double& v : d.features.values()) v = static_cast<double>(gen.index(256));
  d.labels = gen.labels(n, classes);
  d.num_classes = classes;
  d.byte_valued = true;
  return d;
}

}  // namespace

TEST_SUITE("idx") {
  TEST_CASE("hand-built fixture loads exactly") {
    TempDir dir;
    write_fixture(dir / "img", dir / "lab");
    const Dataset d = load_idx(dir / "img", dir / "lab");
    CHECK(d.size() == 2);
    CHECK(d.num_features() == 4);
    CHECK(d.num_classes == 10);
    CHECK(d.byte_valued);
    CHECK_FALSE(d.normalized);
    CHECK(d.features == Matrix::from_rows({{0, 1, 254, 255}, {10, 20, 30, 40}}));
    CHECK(d.labels == Labels{3, 7});
  }

  TEST_CASE("writer round-trips and matches the hand-built bytes") {
    TempDir dir;
    write_fixture(dir / "img", dir / "lab");
    const Dataset d = load_idx(dir / "img", dir / "lab");
    write_idx(d, 2, 2, dir / "img2", dir / "lab2");
    CHECK(read_bytes(dir / "img2") == read_bytes(dir / "img"));
    CHECK(read_bytes(dir / "lab2") == read_bytes(dir / "lab"));

    oracle::Gen gen(51);
    const Dataset r = random_bytes(gen, 37, 12, 10);
    write_idx(r, 3, 4, dir / "ri", dir / "rl");
    const Dataset back = load_idx(dir / "ri", dir / "rl");
    CHECK(back.features == r.features);
    CHECK(back.labels == r.labels);
  }

  TEST_CASE("image magic in a labels file") {
    TempDir dir;
    write_fixture(dir / "img", dir / "lab");
    CHECK_THROWS_WITH(load_idx(dir / "img", dir / "img"), doctest::Contains("wrong magic for labels"));
    try {
      load_idx(dir / "lab", dir / "lab");
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(e.issue() == FormatIssue::BadMagic);
    }
  }

  TEST_CASE("truncated payload") {
    TempDir dir;
    write_fixture(dir / "img", dir / "lab");
    auto bytes = read_bytes(dir / "img");
    bytes.pop_back();
    write_bytes(dir / "short", bytes);
    try {
      load_idx(dir / "short", dir / "lab");
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(e.issue() == FormatIssue::Truncated);
    }
    write_bytes(dir / "stub", {0, 0, 8});
    CHECK_THROWS_AS(load_idx(dir / "stub", dir / "lab"), FormatError);
  }

  TEST_CASE("count mismatch between files") {
    TempDir dir;
    write_fixture(dir / "img", dir / "lab");
    std::vector<unsigned char> lab;
    be32(lab, 0x801);
    be32(lab, 3);
    for (unsigned char v : {1, 2, 3}) lab.push_back(v);
    write_bytes(dir / "lab3", lab);
    try {
      load_idx(dir / "img", dir / "lab3");
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(e.issue() == FormatIssue::CountMismatch);
    }
  }

  TEST_CASE("label outside the class range") {
    TempDir dir;
    write_fixture(dir / "img", dir / "lab");
    try {
      load_idx(dir / "img", dir / "lab", 5);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(e.issue() == FormatIssue::BadLabel);
    }
  }

  TEST_CASE("missing file is unreadable") {
    TempDir dir;
    CHECK_THROWS_AS(load_idx(dir / "nope", dir / "nope2"), FormatError);
  }
}

TEST_SUITE("cifar10") {
  TEST_CASE("single record round-trip with channel-major layout") {
    TempDir dir;
    std::vector<unsigned char> rec;
    rec.push_back(6);
    for (std::size_t i = 0; i < kCifarPixels; ++i) rec.push_back(static_cast<unsigned char>((i * 7) % 256));
    write_bytes(dir / "b.bin", rec);
    const std::vector<fs::path> paths = {dir / "b.bin"};
    const Dataset d = load_cifar10(paths);
    REQUIRE(d.size() == 1);
    CHECK(d.num_features() == 3072);
    CHECK(d.num_classes == 10);
    CHECK(d.labels[0] == 6);
    for (std::size_t i = 0; i < kCifarPixels; ++i) CHECK(d.features(0, i) == static_cast<double>((i * 7) % 256));
    write_cifar10(d, dir / "c.bin");
    CHECK(read_bytes(dir / "c.bin") == rec);
  }

  TEST_CASE("batches concatenate in order") {
    TempDir dir;
    oracle::Gen gen(52);
    const Dataset a = random_bytes(gen, 3, kCifarPixels, 10);
    const Dataset b = random_bytes(gen, 2, kCifarPixels, 10);
    write_cifar10(a, dir / "a.bin");
    write_cifar10(b, dir / "b.bin");
    const std::vector<fs::path> paths = {dir / "a.bin", dir / "b.bin"};
    const Dataset d = load_cifar10(paths);
    CHECK(d.size() == 5);
    Matrix expect = a.features;
    expect.append_rows(b.features);
    CHECK(d.features == expect);
    CHECK(d.labels == Labels{a.labels[0], a.labels[1], a.labels[2], b.labels[0], b.labels[1]});
  }

  TEST_CASE("bad length") {
    TempDir dir;
    write_bytes(dir / "t.bin", std::vector<unsigned char>(3072, 0));
    const std::vector<fs::path> paths = {dir / "t.bin"};
    CHECK_THROWS_WITH(load_cifar10(paths), doctest::Contains("truncated record"));
  }

  TEST_CASE("label above 9") {
    TempDir dir;
    std::vector<unsigned char> rec(kCifarRecordBytes, 0);
    rec[0] = 10;
    write_bytes(dir / "l.bin", rec);
    const std::vector<fs::path> paths = {dir / "l.bin"};
    try {
      load_cifar10(paths);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(e.issue() == FormatIssue::BadLabel);
    }
  }
}

TEST_SUITE("normalize") {
  TEST_CASE("byte images divide by 255") {
    Dataset d;
    d.features = Matrix::from_rows({{0, 255, 51}});
    d.labels = {0};
    d.num_classes = 2;
    d.byte_valued = true;
    const Dataset n = normalize01(d);
    CHECK(n.normalized);
    CHECK(n.features(0, 0) == 0.0);
    CHECK(n.features(0, 1) == 1.0);
    CHECK(n.features(0, 2) == doctest::Approx(0.2));
    CHECK(normalize01(n).features == n.features);
  }

  TEST_CASE("min-max maps each column into [0, 1] and constants to 0") {
    Dataset d;
    d.features = Matrix::from_rows({{-3, 5, 2}, {1, 5, 4}, {-1, 5, 3}});
    d.labels = {0, 1, 0};
    d.num_classes = 2;
    const Dataset n = normalize01(d);
    CHECK(n.features == Matrix::from_rows({{0, 0, 0}, {1, 0, 1}, {0.5, 0, 0.5}}));
    const Dataset forced = normalize01(d, NormalizeMode::MinMax);
    CHECK(forced.features == n.features);
  }

  TEST_CASE("idempotent and bounded on random data") {
    oracle::Gen gen(53);
    for (int rep = 0; rep < 20; ++rep) {
      Dataset d;
      d.features = gen.matrix(gen.between(1, 20), gen.between(1, 8), -50, 50);
      d.labels = gen.labels(d.features.rows(), 3);
      d.num_classes = 3;
      const Dataset once = normalize01(d);
      once.validate();
      CHECK(normalize01(once).features == once.features);
      for (double v : once.features.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_SUITE("synthetic") {
  TEST_CASE("same seed, same data") {
    const Dataset a = two_gaussians(30, 0.5, 77);
    const Dataset b = two_gaussians(30, 0.5, 77);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK_FALSE(two_gaussians(30, 0.5, 78).features == a.features);
  }

  TEST_CASE("narrow clusters are linearly separable") {
    const Dataset d = two_gaussians(100, 0.1, 5);
    CHECK(d.size() == 200);
    CHECK(d.num_classes == 2);
    const AugmentedBatch b = augment(d);
    const Matrix x = b.patterns;
    const Matrix xt = oracle::transpose(x);
    const Matrix w = ols_solve(oracle::matmul(xt, x), oracle::matmul(xt, b.targets)).solution;
    CHECK(oracle::error_rate(oracle::scores(w, x), b.labels) == 0.0);
  }

  TEST_CASE("identical means sit at chance") {
    const GaussianClass same[] = {{{0.0, 0.0}, 1.0}, {{0.0, 0.0}, 1.0}};
    const Dataset train = synth_gaussians(500, same, 1);
    const Dataset test = synth_gaussians(500, same, 2);
    const AugmentedBatch tr = augment(train);
    const Matrix xt = oracle::transpose(tr.patterns);
    const Matrix w = ols_solve(oracle::matmul(xt, tr.patterns), oracle::matmul(xt, tr.targets)).solution;
    const AugmentedBatch te = augment(test);
    const double pe = oracle::error_rate(oracle::scores(w, te.patterns), te.labels);
    CHECK(pe >= 0.4);
    CHECK(pe <= 0.6);
  }

  TEST_CASE("invalid arguments") {
    const GaussianClass one[] = {{{0.0}, 1.0}};
    CHECK_THROWS(synth_gaussians(5, one, 0));
    const GaussianClass two[] = {{{0.0}, 1.0}, {{0.0}, 1.0}};
    CHECK_THROWS(synth_gaussians(0, two, 0));
    const GaussianClass ragged[] = {{{0.0}, 1.0}, {{0.0, 1.0}, 1.0}};
    CHECK_THROWS(synth_gaussians(5, ragged, 0));
  }
}

TEST_SUITE("dataset") {
  TEST_CASE("validation and subsets") {
    Dataset d;
    d.features = Matrix::from_rows({{1}, {2}, {3}});
    d.labels = {0, 1, 2};
    d.num_classes = 3;
    d.validate();
    const std::vector<std::size_t> rows = {2, 0};
    const Dataset s = d.subset(rows);
    CHECK(s.features == Matrix::from_rows({{3}, {1}}));
    CHECK(s.labels == Labels{2, 0});
    d.labels[1] = 3;
    CHECK_THROWS(d.validate());
    d.labels[1] = 1;
    d.normalized = true;
    CHECK_THROWS(d.validate());
  }

  TEST_CASE("named benchmarks load from a root with train and test files") {
    TempDir dir;
    fs::create_directories(dir / "mnist");
    oracle::Gen gen(54);
    const Dataset train = random_bytes(gen, 5, 4, 10);
    const Dataset test = random_bytes(gen, 3, 4, 10);
    write_idx(train, 2, 2, dir / "mnist/train-images-idx3-ubyte", dir / "mnist/train-labels-idx1-ubyte");
    CHECK(load_named("mnist", dir.path).size() == 5);
    write_idx(test, 2, 2, dir / "mnist/t10k-images-idx3-ubyte", dir / "mnist/t10k-labels-idx1-ubyte");
    const Dataset merged = load_named("mnist", dir.path);
    CHECK(merged.size() == 8);
    CHECK(merged.name == "mnist");
    CHECK(merged.labels[5] == test.labels[0]);
    CHECK_THROWS_AS(load_named("fashion-mnist", dir.path), FormatError);
    CHECK_THROWS(load_named("svhn", dir.path));
  }
}
