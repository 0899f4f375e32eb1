#include "ticketforge/dataset.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "ticketforge/error.hpp"

namespace ticketforge {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::string& bytes, std::size_t pos, const std::filesystem::path& path) {
  if (pos + 4 > bytes.size()) {
    throw FormatError(fmt::format("{}: header truncated at byte {}", path.string(), pos), pos);
  }
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[pos + i]);
  return v;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

Split take_rows(const Split& src, const std::vector<std::size_t>& rows) {
  Split out;
  out.dim = src.dim;
  out.x.reserve(rows.size() * src.dim);
  out.y.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto row = src.row(r);
    out.x.insert(out.x.end(), row.begin(), row.end());
    out.y.push_back(src.y[r]);
  }
  return out;
}

}  // namespace

Split make_two_moons(std::size_t n, double noise, RngState& rng) {
  if (n < 2) throw Error("two_moons needs at least 2 samples");
  if (noise < 0.0) throw Error("two_moons noise must be non-negative");
  const std::size_t n_outer = n / 2;
  const std::size_t n_inner = n - n_outer;
  Split s;
  s.dim = 2;
  for (double t : linspace(0.0, std::numbers::pi, n_outer)) {
    s.x.push_back(std::cos(t));
    s.x.push_back(std::sin(t));
    s.y.push_back(0);
  }
  for (double t : linspace(0.0, std::numbers::pi, n_inner)) {
    s.x.push_back(1.0 - std::cos(t));
    s.x.push_back(1.0 - std::sin(t) - 0.5);
    s.y.push_back(1);
  }
  if (noise > 0.0) {
    for (double& v : s.x) v += noise * rng.normal();
  }
  shuffle_rows(s, rng);
  return s;
}

Split make_gaussian_blobs(std::size_t n, std::size_t dim, std::size_t centers, double stddev,
                          double center_box, RngState& rng) {
  if (n == 0 || dim == 0 || centers < 2) {
    throw Error("gaussian_blobs needs n > 0, dim > 0 and at least 2 centers");
  }
  if (stddev < 0.0 || center_box <= 0.0) throw Error("gaussian_blobs: invalid scale");
  std::vector<double> c(centers * dim);
  for (double& v : c) v = rng.uniform(-center_box, center_box);
  Split s;
  s.dim = dim;
  s.x.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % centers;
    for (std::size_t d = 0; d < dim; ++d) s.x.push_back(c[k * dim + d] + stddev * rng.normal());
    s.y.push_back(static_cast<int>(k));
  }
  shuffle_rows(s, rng);
  return s;
}

RawImages read_idx_images(const std::filesystem::path& path, std::size_t max_items) {
  const std::string bytes = read_file(path);
  const std::uint32_t magic = read_be32(bytes, 0, path);
  if (magic != 0x00000803u) {
    throw FormatError(fmt::format("{}: bad IDX image magic 0x{:08x} at byte 0, expected 0x00000803",
                                  path.string(), magic),
                      0);
  }
  const std::size_t count = read_be32(bytes, 4, path);
  const std::size_t rows = read_be32(bytes, 8, path);
  const std::size_t cols = read_be32(bytes, 12, path);
  constexpr std::size_t header = 16;
  const std::size_t expected = header + count * rows * cols;
  if (bytes.size() != expected) {
    const std::size_t at = std::min(bytes.size(), expected);
    throw FormatError(fmt::format("{}: expected {} bytes for {} images of {}x{}, file has {} "
                                  "(mismatch at byte {})",
                                  path.string(), expected, count, rows, cols, bytes.size(), at),
                      at);
  }
  RawImages img;
  img.count = max_items == 0 ? count : std::min(count, max_items);
  img.shape = {1, rows, cols};
  img.pixels.assign(bytes.begin() + header,
                    bytes.begin() + static_cast<std::ptrdiff_t>(header + img.count * rows * cols));
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path,
                                          std::size_t max_items) {
  const std::string bytes = read_file(path);
  const std::uint32_t magic = read_be32(bytes, 0, path);
  if (magic != 0x00000801u) {
    throw FormatError(fmt::format("{}: bad IDX label magic 0x{:08x} at byte 0, expected 0x00000801",
                                  path.string(), magic),
                      0);
  }
  const std::size_t count = read_be32(bytes, 4, path);
  constexpr std::size_t header = 8;
  if (bytes.size() != header + count) {
    const std::size_t at = std::min(bytes.size(), header + count);
    throw FormatError(fmt::format("{}: expected {} label bytes, file has {} (mismatch at byte {})",
                                  path.string(), header + count, bytes.size(), at),
                      at);
  }
  const std::size_t n = max_items == 0 ? count : std::min(count, max_items);
  return {bytes.begin() + header, bytes.begin() + static_cast<std::ptrdiff_t>(header + n)};
}

Cifar10Batch read_cifar10_batch(const std::filesystem::path& path, std::size_t max_items) {
  const std::string bytes = read_file(path);
  if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
    const std::size_t at = bytes.size() / kCifarRecordBytes * kCifarRecordBytes;
    throw FormatError(fmt::format("{}: size {} is not a positive multiple of the {}-byte record; "
                                  "incomplete record at byte {}",
                                  path.string(), bytes.size(), kCifarRecordBytes, at),
                      at);
  }
  std::size_t n = bytes.size() / kCifarRecordBytes;
  if (max_items != 0) n = std::min(n, max_items);
  Cifar10Batch batch;
  batch.labels.reserve(n);
  batch.pixels.reserve(n * kCifarPixelBytes);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t off = r * kCifarRecordBytes;
    const auto label = static_cast<std::uint8_t>(bytes[off]);
    if (label > 9) {
      throw FormatError(
          fmt::format("{}: label {} out of range [0, 9] at byte {}", path.string(), label, off),
          off);
    }
    batch.labels.push_back(label);
    batch.pixels.insert(batch.pixels.end(), bytes.begin() + static_cast<std::ptrdiff_t>(off + 1),
                        bytes.begin() + static_cast<std::ptrdiff_t>(off + kCifarRecordBytes));
  }
  return batch;
}

void shuffle_rows(Split& split, RngState& rng) {
  const std::size_t n = split.size();
  if (n < 2) return;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  split = take_rows(split, perm);
}

void truncate(Split& split, std::size_t n) {
  if (n == 0 || n >= split.size()) return;
  split.y.resize(n);
  split.x.resize(n * split.dim);
}

void carve_validation(Split& train, Split& val, double val_fraction, RngState& rng) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(fmt::format("val_fraction must lie in (0, 1), got {}", val_fraction));
  }
  shuffle_rows(train, rng);
  const auto n_val =
      static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(train.size())));
  if (n_val == 0 || n_val >= train.size()) {
    throw Error(fmt::format("val_fraction {} leaves an empty split of {} samples", val_fraction,
                            train.size()));
  }
  std::vector<std::size_t> val_rows(n_val), train_rows(train.size() - n_val);
  std::iota(val_rows.begin(), val_rows.end(), std::size_t{0});
  std::iota(train_rows.begin(), train_rows.end(), n_val);
  val = take_rows(train, val_rows);
  train = take_rows(train, train_rows);
}

DatasetSplits split_dataset(Split all, double test_fraction, double val_fraction,
                            RngState& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(fmt::format("test_fraction must lie in (0, 1), got {}", test_fraction));
  }
  shuffle_rows(all, rng);
  const auto n_test =
      static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(all.size())));
  if (n_test == 0 || n_test >= all.size()) {
    throw Error(fmt::format("test_fraction {} leaves an empty split of {} samples", test_fraction,
                            all.size()));
  }
  std::vector<std::size_t> test_rows(n_test), rest_rows(all.size() - n_test);
  std::iota(test_rows.begin(), test_rows.end(), std::size_t{0});
  std::iota(rest_rows.begin(), rest_rows.end(), n_test);
  DatasetSplits out;
  out.test = take_rows(all, test_rows);
  out.train = take_rows(all, rest_rows);
  carve_validation(out.train, out.val, val_fraction, rng);
  out.input_shape = {all.dim};
  int max_label = 0;
  for (int y : all.y) max_label = std::max(max_label, y);
  out.num_classes = static_cast<std::size_t>(max_label) + 1;
  return out;
}

}  // namespace ticketforge
