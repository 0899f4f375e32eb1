#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ticketforge/network.hpp"
#include "ticketforge/rng.hpp"

namespace ticketforge {

/// Row-major samples (size() × dim) with integer class labels.
struct Split {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  bool empty() const { return y.empty(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }

  friend bool operator==(const Split&, const Split&) = default;
};

struct DatasetSplits {
  Split train;
  Split val;
  Split test;
  Shape input_shape;
  std::size_t num_classes = 0;
};

/// Two interleaving half circles, labels 0 (upper) and 1 (lower), with
/// isotropic Gaussian noise. Samples are returned shuffled.
Split make_two_moons(std::size_t n, double noise, RngState& rng);

/// `centers` isotropic Gaussian clusters in `dim` dimensions with centers
/// drawn uniformly in [-center_box, center_box]^dim; label = cluster index.
Split make_gaussian_blobs(std::size_t n, std::size_t dim, std::size_t centers, double stddev,
                          double center_box, RngState& rng);

// File formats.
//
// MNIST IDX: big-endian u32 magic (0x00000803 images, 0x00000801 labels),
// big-endian u32 dimensions, then unsigned bytes.
// CIFAR-10 binary: records of exactly 3073 bytes, a label byte in [0, 9]
// followed by 3×32×32 channel-major pixels.

struct RawImages {
  std::size_t count = 0;
  Shape shape;  // [channels, rows, cols]
  std::vector<std::uint8_t> pixels;
};

RawImages read_idx_images(const std::filesystem::path& path, std::size_t max_items = 0);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path,
                                          std::size_t max_items = 0);

/// Labels and channel-major pixels from one CIFAR-10 binary batch file.
struct Cifar10Batch {
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> pixels;  // labels.size() × 3072
};
Cifar10Batch read_cifar10_batch(const std::filesystem::path& path, std::size_t max_items = 0);

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarPixelBytes = 3 * 32 * 32;

/// Shuffles `all` and carves it into disjoint train/val/test splits.
DatasetSplits split_dataset(Split all, double test_fraction, double val_fraction,
                            RngState& rng);

/// Moves `val_fraction` of a (shuffled) training set into a validation split.
void carve_validation(Split& train, Split& val, double val_fraction, RngState& rng);

/// Random permutation of `split` rows.
void shuffle_rows(Split& split, RngState& rng);

/// Keeps the first `n` rows (no-op when n is 0 or exceeds the size).
void truncate(Split& split, std::size_t n);

}  // namespace ticketforge
