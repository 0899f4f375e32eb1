#pragma once

#include <cstddef>
#include <vector>

#include "ticketforge/mask.hpp"
#include "ticketforge/network.hpp"

namespace ticketforge {

/// LAMP scores per layer, shaped like the weights; 0 for pruned entries.
struct LampScoreSet {
  std::vector<std::vector<double>> layers;
};

/// Layer-adaptive magnitude scores. Within a layer, surviving weights are
/// ordered by squared magnitude ascending (ties by ascending flat index) and
///
///   score(u) = w_u² / Σ_{v ≥ u in that order} w_v²
///
/// so the last weight of each layer scores exactly 1. A layer whose
/// surviving weights are all zero scores 0 throughout.
LampScoreSet lamp_scores(const Parameters& params, const MaskSet& mask);

struct PruneResult {
  /// Survivors after this stage; already-pruned entries stay 0.
  MaskSet mask;
  std::size_t removed = 0;
  /// floor(fraction · survivors) was zero, so nothing was pruned.
  bool no_op = false;
};

/// Removes floor(fraction · S) of the S surviving weights, lowest scores
/// first across all layers, ties by ascending (layer, flat index).
///
/// The fraction applies to the weights still alive, so K stages keep
/// (1 - fraction)^K of the network up to floor rounding. Taking it as a
/// fraction of the original count would make every stage remove the same
/// number of weights instead.
PruneResult select_prune(const LampScoreSet& scores, const MaskSet& mask, double fraction);

/// Elementwise product. An empty list yields the all-ones mask for `shapes`.
MaskSet compose_masks(const std::vector<MaskSet>& masks, const std::vector<Shape>& shapes);

/// Surviving weights copied bit for bit, pruned weights set to +0.0, biases
/// copied unchanged.
Parameters apply_mask(const Parameters& params, const MaskSet& mask);

/// Surviving weight count over total weight count; 0 for an empty mask.
double sparsity(const MaskSet& mask);

}  // namespace ticketforge
