#pragma once

#include "lcor/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcor {

using Label = std::size_t;
using Labels = std::vector<Label>;

/// Raw patterns with class labels. Labels are 0-based: class index i in the
/// files and here corresponds to class i+1 in one-based notation.
struct Dataset {
  Matrix features;  ///< N_v x N
  Labels labels;
  std::size_t num_classes = 0;
  bool normalized = false;
  bool byte_valued = false;  ///< features are raw 0..255 pixel bytes
  std::string name;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_features() const noexcept { return features.cols(); }

  /// Row subset in the given order.
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Throws unless shapes agree, labels lie in [0, M) and features are finite.
  void validate() const;
};

enum class FormatIssue { BadMagic, Truncated, CountMismatch, BadLabel, Unreadable };

/// Malformed or inconsistent dataset files.
class FormatError : public std::runtime_error {
 public:
  FormatError(FormatIssue issue, const std::string& what)
      : std::runtime_error(what), issue_(issue) {}
  FormatIssue issue() const noexcept { return issue_; }

 private:
  FormatIssue issue_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarPixels = 3072;

/// Reads an IDX image tensor (count, rows, cols) and its IDX label vector.
/// Pixels are flattened row-major and kept as raw byte values.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes = 10);

/// Concatenates CIFAR-10 binary batches (1 label byte + 3072 channel-major
/// pixel bytes per record).
Dataset load_cifar10(std::span<const std::filesystem::path> batches);

/// Writers used by fixtures and `prepare-data`. Features must be integers in
/// [0, 255]; `rows * cols` must equal the feature count.
void write_idx(const Dataset& d, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images, const std::filesystem::path& labels);
void write_cifar10(const Dataset& d, const std::filesystem::path& batch);

enum class NormalizeMode { Auto, Byte255, MinMax };

/// Maps features into [0, 1]. Auto divides byte images by 255 and uses
/// per-feature min-max otherwise; constant features map to 0. A dataset
/// already flagged normalized is returned unchanged.
Dataset normalize01(Dataset d, NormalizeMode mode = NormalizeMode::Auto);

struct GaussianClass {
  std::vector<double> mean;
  double scale = 1.0;  ///< isotropic standard deviation
};

/// Deterministic isotropic Gaussian clusters, `n_per_class` rows per class,
/// emitted class by class.
Dataset synth_gaussians(std::size_t n_per_class, std::span<const GaussianClass> classes,
                        std::uint64_t seed);

/// The two-class, two-feature layout used for separable fixtures: means
/// (-2, 0) and (2, 0).
Dataset two_gaussians(std::size_t n_per_class, double scale, std::uint64_t seed,
                      double half_gap = 2.0);

/// Resolves a named benchmark ("mnist", "fashion-mnist", "cifar10") under a
/// root directory, merging the train and test files when both exist.
Dataset load_named(const std::string& name, const std::filesystem::path& root);

/// Directory from LCOR_DATA_ROOT, empty when unset.
std::filesystem::path data_root_from_env();

}  // namespace lcor
