#pragma once

#include <cstdint>
#include <vector>

#include "ticketforge/network.hpp"

namespace ticketforge {

/// Per-parameterized-layer survivor indicator (1 = kept, 0 = pruned), shaped
/// like that layer's weights. Biases are never masked.
struct MaskSet {
  std::vector<Shape> shapes;
  std::vector<std::vector<std::uint8_t>> layers;

  std::size_t total_count() const;
  std::size_t surviving_count() const;

  friend bool operator==(const MaskSet&, const MaskSet&) = default;
};

MaskSet full_mask(const Parameters& params);
MaskSet full_mask(const NetworkSpec& spec);
MaskSet full_mask(const std::vector<Shape>& shapes);

/// Throws ShapeError unless every mask layer matches the weight tensor, and
/// every entry is 0 or 1.
void check_congruent(const MaskSet& mask, const Parameters& params);

/// Elementwise a <= b over all layers.
bool is_subset(const MaskSet& a, const MaskSet& b);

}  // namespace ticketforge
