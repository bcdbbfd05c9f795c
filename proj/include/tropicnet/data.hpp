#ifndef TROPICNET_DATA_HPP
#define TROPICNET_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tropicnet/matrix.hpp"

namespace tropicnet {

struct Dataset {
  Matrix x;                             // samples x features
  std::vector<std::size_t> y;           // labels in [0, classes)
  std::size_t classes = 0;
  std::vector<std::string> class_names;  // optional

  std::size_t size() const noexcept { return x.rows(); }
  std::size_t features() const noexcept { return x.cols(); }
  std::span<const double> sample(std::size_t n) const { return x.row(n); }

  /// Throws InvalidArgument unless N >= 1, labels are in range and every
  /// feature is finite.
  void validate() const;
};

/// Reads an IDX image file (magic 0x00000803) and its IDX label file
/// (magic 0x00000801). Pixel bytes are kept as raw values in [0, 255].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes byte-valued features back to the IDX pair. Every feature must be an
/// integer in [0, 255] and the feature count must equal rows * cols.
void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               const Dataset& data, std::uint32_t rows, std::uint32_t cols);

/// CSV with real-valued feature columns followed by a string label. A header
/// row is detected and skipped. Class indices follow the alphabetical order of
/// the label strings.
Dataset load_iris_csv(const std::filesystem::path& path);
void write_iris_csv(const std::filesystem::path& path, const Dataset& data);

/// Seeded shuffle, then the first round(fraction * N) samples form the
/// training part.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

enum class Normalization { none, unit_byte };

Normalization parse_normalization(const std::string& name);

/// unit_byte divides by 255 and refuses data that is not byte-valued.
Dataset normalize(const Dataset& data, Normalization scheme);

Dataset subset(const Dataset& data, std::span<const std::size_t> indices);
Dataset select_features(const Dataset& data, std::span<const std::size_t> features);

/// Pixel indices of a regular sub-grid of a rows x cols image: every
/// `stride`-th row and column starting at `offset`.
std::vector<std::size_t> pixel_grid(std::size_t rows, std::size_t cols, std::size_t stride,
                                    std::size_t offset);

/// First `count` samples of a seeded permutation.
Dataset sample_subset(const Dataset& data, std::size_t count, std::uint64_t seed);

}  // namespace tropicnet

#endif  // TROPICNET_DATA_HPP
