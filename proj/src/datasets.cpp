#include "lcor/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

namespace lcor {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatIssue::Unreadable, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void push_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 24));
  b.push_back(static_cast<std::uint8_t>(v >> 16));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

std::uint8_t to_byte(double v) {
  if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v)) {
    throw std::invalid_argument("feature value " + std::to_string(v) + " is not a byte");
  }
  return static_cast<std::uint8_t>(v);
}

std::string hex(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xF];
  return s;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.num_classes = num_classes;
  out.normalized = normalized;
  out.byte_valued = byte_valued;
  out.name = name;
  out.features = Matrix(rows.size(), num_features());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw DimensionError("dataset " + name + ": " + std::to_string(features.rows()) +
                         " feature rows vs " + std::to_string(labels.size()) + " labels");
  }
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] >= num_classes) {
      throw FormatError(FormatIssue::BadLabel, "label " + std::to_string(labels[p]) +
                                                   " out of range at row " + std::to_string(p));
    }
  }
  if (!features.all_finite()) throw std::invalid_argument("dataset " + name + " has non-finite features");
  if (normalized) {
    for (double v : features.values())
      if (v < 0.0 || v > 1.0) throw std::invalid_argument("normalized dataset has values outside [0, 1]");
  }
}

Dataset load_idx(const fs::path& images, const fs::path& labels, std::size_t num_classes) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);

  if (img.size() < 4) throw FormatError(FormatIssue::Truncated, "truncated image header in " + images.string());
  const std::uint32_t img_magic = read_be32(img, 0);
  if (img_magic != kIdxImageMagic) {
    throw FormatError(FormatIssue::BadMagic, "wrong magic for images: " + hex(img_magic) + " in " +
                                                 images.string());
  }
  if (img.size() < 16) throw FormatError(FormatIssue::Truncated, "truncated image header in " + images.string());
  if (lab.size() < 4) throw FormatError(FormatIssue::Truncated, "truncated label header in " + labels.string());
  const std::uint32_t lab_magic = read_be32(lab, 0);
  if (lab_magic != kIdxLabelMagic) {
    throw FormatError(FormatIssue::BadMagic, "wrong magic for labels: " + hex(lab_magic) + " in " +
                                                 labels.string());
  }
  if (lab.size() < 8) throw FormatError(FormatIssue::Truncated, "truncated label header in " + labels.string());

  const std::size_t count = read_be32(img, 4);
  const std::size_t rows = read_be32(img, 8);
  const std::size_t cols = read_be32(img, 12);
  const std::size_t n = rows * cols;
  if (img.size() != 16 + count * n) {
    throw FormatError(FormatIssue::Truncated, "image payload of " + images.string() + " has " +
                                                  std::to_string(img.size() - 16) + " bytes, header promises " +
                                                  std::to_string(count * n));
  }
  const std::size_t label_count = read_be32(lab, 4);
  if (lab.size() != 8 + label_count) {
    throw FormatError(FormatIssue::Truncated, "label payload of " + labels.string() + " has " +
                                                  std::to_string(lab.size() - 8) + " bytes, header promises " +
                                                  std::to_string(label_count));
  }
  if (label_count != count) {
    throw FormatError(FormatIssue::CountMismatch, "count mismatch: " + std::to_string(count) +
                                                      " images vs " + std::to_string(label_count) + " labels");
  }

  Dataset d;
  d.name = images.filename().string();
  d.num_classes = num_classes;
  d.byte_valued = true;
  d.features = Matrix(count, n);
  std::transform(img.begin() + 16, img.end(), d.features.values().begin(),
                 [](std::uint8_t v) { return static_cast<double>(v); });
  d.labels.assign(lab.begin() + 8, lab.end());
  for (std::size_t p = 0; p < count; ++p) {
    if (d.labels[p] >= num_classes) {
      throw FormatError(FormatIssue::BadLabel, "label " + std::to_string(d.labels[p]) + " at row " +
                                                   std::to_string(p) + " of " + labels.string());
    }
  }
  return d;
}

Dataset load_cifar10(std::span<const fs::path> batches) {
  if (batches.empty()) throw std::invalid_argument("no CIFAR-10 batch files given");
  std::vector<std::vector<std::uint8_t>> files;
  std::size_t total = 0;
  for (const auto& path : batches) {
    auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
      throw FormatError(FormatIssue::Truncated, "truncated record in " + path.string() + " (" +
                                                    std::to_string(bytes.size()) + " bytes)");
    }
    total += bytes.size() / kCifarRecordBytes;
    files.push_back(std::move(bytes));
  }

  Dataset d;
  d.name = "cifar10";
  d.num_classes = 10;
  d.byte_valued = true;
  d.features = Matrix(total, kCifarPixels);
  d.labels.reserve(total);
  std::size_t row = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& bytes = files[f];
    for (std::size_t off = 0; off < bytes.size(); off += kCifarRecordBytes, ++row) {
      if (bytes[off] > 9) {
        throw FormatError(FormatIssue::BadLabel, "label " + std::to_string(bytes[off]) + " > 9 in " +
                                                     batches[f].string());
      }
      d.labels.push_back(bytes[off]);
      auto out = d.features.row(row);
      for (std::size_t i = 0; i < kCifarPixels; ++i) out[i] = bytes[off + 1 + i];
    }
  }
  return d;
}

void write_idx(const Dataset& d, std::size_t rows, std::size_t cols, const fs::path& images,
               const fs::path& labels) {
  if (rows * cols != d.num_features()) {
    throw DimensionError("IDX geometry " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " does not match " + std::to_string(d.num_features()) + " features");
  }
  std::vector<std::uint8_t> img;
  img.reserve(16 + d.features.size());
  push_be32(img, kIdxImageMagic);
  push_be32(img, static_cast<std::uint32_t>(d.size()));
  push_be32(img, static_cast<std::uint32_t>(rows));
  push_be32(img, static_cast<std::uint32_t>(cols));
  for (double v : d.features.values()) img.push_back(to_byte(v));

  std::vector<std::uint8_t> lab;
  lab.reserve(8 + d.size());
  push_be32(lab, kIdxLabelMagic);
  push_be32(lab, static_cast<std::uint32_t>(d.size()));
  for (Label l : d.labels) {
    if (l > 255) throw std::invalid_argument("label does not fit in a byte");
    lab.push_back(static_cast<std::uint8_t>(l));
  }
  write_file(images, img);
  write_file(labels, lab);
}

void write_cifar10(const Dataset& d, const fs::path& batch) {
  if (d.num_features() != kCifarPixels) {
    throw DimensionError("CIFAR-10 records need 3072 features, got " + std::to_string(d.num_features()));
  }
  std::vector<std::uint8_t> bytes;
  bytes.reserve(d.size() * kCifarRecordBytes);
  for (std::size_t p = 0; p < d.size(); ++p) {
    if (d.labels[p] > 9) throw std::invalid_argument("CIFAR-10 label > 9");
    bytes.push_back(static_cast<std::uint8_t>(d.labels[p]));
    for (double v : d.features.row(p)) bytes.push_back(to_byte(v));
  }
  write_file(batch, bytes);
}

Dataset normalize01(Dataset out, NormalizeMode mode) {
  if (out.normalized) return out;
  if (mode == NormalizeMode::Auto) mode = out.byte_valued ? NormalizeMode::Byte255 : NormalizeMode::MinMax;

  const Dataset& d = out;
  if (mode == NormalizeMode::Byte255) {
    for (double& v : out.features.values()) v /= 255.0;
  } else {
    const std::size_t n = d.num_features();
    std::vector<double> lo(n, std::numeric_limits<double>::infinity());
    std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
    for (std::size_t p = 0; p < d.size(); ++p) {
      auto row = d.features.row(p);
      for (std::size_t j = 0; j < n; ++j) {
        lo[j] = std::min(lo[j], row[j]);
        hi[j] = std::max(hi[j], row[j]);
      }
    }
    for (std::size_t p = 0; p < out.size(); ++p) {
      auto row = out.features.row(p);
      for (std::size_t j = 0; j < n; ++j) {
        const double range = hi[j] - lo[j];
        row[j] = range > 0.0 ? (row[j] - lo[j]) / range : 0.0;
      }
    }
  }
  for (double& v : out.features.values()) v = std::clamp(v, 0.0, 1.0);
  out.normalized = true;
  return out;
}

Dataset synth_gaussians(std::size_t n_per_class, std::span<const GaussianClass> classes,
                        std::uint64_t seed) {
  if (classes.size() < 2) throw std::invalid_argument("synth_gaussians needs at least two classes");
  if (n_per_class == 0) throw std::invalid_argument("synth_gaussians needs n_per_class >= 1");
  const std::size_t dim = classes.front().mean.size();
  if (dim == 0) throw std::invalid_argument("synth_gaussians needs a nonempty mean");
  for (const auto& c : classes) {
    if (c.mean.size() != dim) throw DimensionError("class means differ in dimension");
    if (!(c.scale >= 0.0)) throw std::invalid_argument("negative covariance scale");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  Dataset d;
  d.name = "synthetic";
  d.num_classes = classes.size();
  d.features = Matrix(n_per_class * classes.size(), dim);
  d.labels.reserve(d.features.rows());
  std::size_t row = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
      auto out = d.features.row(row);
      for (std::size_t j = 0; j < dim; ++j) out[j] = classes[c].mean[j] + classes[c].scale * unit(rng);
      d.labels.push_back(c);
    }
  }
  return d;
}

Dataset two_gaussians(std::size_t n_per_class, double scale, std::uint64_t seed, double half_gap) {
  const GaussianClass classes[] = {{{-half_gap, 0.0}, scale}, {{half_gap, 0.0}, scale}};
  return synth_gaussians(n_per_class, classes, seed);
}

namespace {

Dataset concat(Dataset a, const Dataset& b) {
  if (a.num_features() != b.num_features()) {
    throw DimensionError("cannot merge datasets with " + std::to_string(a.num_features()) + " and " +
                         std::to_string(b.num_features()) + " features");
  }
  a.features.append_rows(b.features);
  a.labels.insert(a.labels.end(), b.labels.begin(), b.labels.end());
  return a;
}

Dataset load_idx_dir(const fs::path& dir, const std::string& name) {
  const fs::path train_images = dir / "train-images-idx3-ubyte";
  const fs::path train_labels = dir / "train-labels-idx1-ubyte";
  if (!fs::exists(train_images)) throw FormatError(FormatIssue::Unreadable, "missing " + train_images.string());
  Dataset d = load_idx(train_images, train_labels);
  const fs::path test_images = dir / "t10k-images-idx3-ubyte";
  const fs::path test_labels = dir / "t10k-labels-idx1-ubyte";
  if (fs::exists(test_images) && fs::exists(test_labels)) d = concat(std::move(d), load_idx(test_images, test_labels));
  d.name = name;
  return d;
}

}  // namespace

Dataset load_named(const std::string& name, const fs::path& root) {
  if (name == "mnist") return load_idx_dir(root / "mnist", name);
  if (name == "fashion-mnist") return load_idx_dir(root / "fashion-mnist", name);
  if (name == "cifar10") {
    const fs::path dir = root / "cifar-10-batches-bin";
    std::vector<fs::path> batches;
    for (int i = 1; i <= 5; ++i) batches.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    if (fs::exists(dir / "test_batch.bin")) batches.push_back(dir / "test_batch.bin");
    for (const auto& b : batches)
      if (!fs::exists(b)) throw FormatError(FormatIssue::Unreadable, "missing " + b.string());
    return load_cifar10(batches);
  }
  throw std::invalid_argument("unknown dataset name '" + name + "' (expected mnist, fashion-mnist or cifar10)");
}

fs::path data_root_from_env() {
  const char* root = std::getenv("LCOR_DATA_ROOT");
  return root == nullptr ? fs::path{} : fs::path{root};
}

}  // namespace lcor
