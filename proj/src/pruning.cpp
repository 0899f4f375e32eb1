#include "ticketforge/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <tuple>

#include "ticketforge/error.hpp"

namespace ticketforge {

std::size_t MaskSet::total_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

std::size_t MaskSet::surviving_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(std::count(l.begin(), l.end(), 1));
  return n;
}

MaskSet full_mask(const std::vector<Shape>& shapes) {
  MaskSet m;
  m.shapes = shapes;
  for (const auto& s : shapes) m.layers.emplace_back(shape_size(s), std::uint8_t{1});
  return m;
}

MaskSet full_mask(const Parameters& params) {
  std::vector<Shape> shapes;
  for (const auto& l : params.layers) shapes.push_back(l.weight_shape);
  return full_mask(shapes);
}

MaskSet full_mask(const NetworkSpec& spec) {
  std::vector<Shape> shapes;
  for (std::size_t i : parameterized_layers(spec)) shapes.push_back(weight_shape(spec.layers[i]));
  return full_mask(shapes);
}

void check_congruent(const MaskSet& mask, const Parameters& params) {
  if (mask.layers.size() != params.layers.size() || mask.shapes.size() != mask.layers.size()) {
    throw ShapeError(fmt::format("mask has {} layers, parameters have {}", mask.layers.size(),
                                 params.layers.size()));
  }
  for (std::size_t j = 0; j < mask.layers.size(); ++j) {
    if (mask.shapes[j] != params.layers[j].weight_shape ||
        mask.layers[j].size() != params.layers[j].weights.size()) {
      throw ShapeError(fmt::format("mask layer {} has shape {}, weights have {}", j,
                                   shape_string(mask.shapes[j]),
                                   shape_string(params.layers[j].weight_shape)));
    }
    for (auto bit : mask.layers[j]) {
      if (bit > 1) throw ShapeError(fmt::format("mask layer {} has a non-binary entry", j));
    }
  }
}

bool is_subset(const MaskSet& a, const MaskSet& b) {
  if (a.shapes != b.shapes) return false;
  for (std::size_t j = 0; j < a.layers.size(); ++j) {
    for (std::size_t i = 0; i < a.layers[j].size(); ++i) {
      if (a.layers[j][i] > b.layers[j][i]) return false;
    }
  }
  return true;
}

LampScoreSet lamp_scores(const Parameters& params, const MaskSet& mask) {
  check_congruent(mask, params);
  LampScoreSet scores;
  scores.layers.reserve(params.layers.size());
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < params.layers.size(); ++j) {
    const auto& w = params.layers[j].weights;
    const auto& m = mask.layers[j];
    std::vector<double> s(w.size(), 0.0);

    order.clear();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (m[i]) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double wa = w[a] * w[a];
      const double wb = w[b] * w[b];
      return wa < wb || (wa == wb && a < b);
    });

    // Suffix sums, accumulated from the largest magnitude down.
    double tail = 0.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const double sq = w[*it] * w[*it];
      tail += sq;
      s[*it] = tail > 0.0 ? sq / tail : 0.0;
    }
    scores.layers.push_back(std::move(s));
  }
  return scores;
}

PruneResult select_prune(const LampScoreSet& scores, const MaskSet& mask, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(fmt::format("prune fraction must lie in (0, 1), got {}", fraction));
  }
  if (scores.layers.size() != mask.layers.size()) {
    throw ShapeError("score set and mask have different layer counts");
  }

  struct Candidate {
    double score;
    std::size_t layer;
    std::size_t index;
  };
  std::vector<Candidate> alive;
  for (std::size_t j = 0; j < mask.layers.size(); ++j) {
    if (scores.layers[j].size() != mask.layers[j].size()) {
      throw ShapeError(fmt::format("score layer {} does not match mask", j));
    }
    for (std::size_t i = 0; i < mask.layers[j].size(); ++i) {
      if (mask.layers[j][i]) alive.push_back({scores.layers[j][i], j, i});
    }
  }

  PruneResult result;
  result.mask = mask;
  const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(alive.size())));
  if (n == 0) {
    result.no_op = true;
    return result;
  }
  std::nth_element(alive.begin(), alive.begin() + static_cast<std::ptrdiff_t>(n) - 1, alive.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return std::tie(a.score, a.layer, a.index) <
                            std::tie(b.score, b.layer, b.index);
                   });
  // nth_element puts the n smallest (under the strict total order) in front.
  for (std::size_t r = 0; r < n; ++r) result.mask.layers[alive[r].layer][alive[r].index] = 0;
  result.removed = n;
  return result;
}

MaskSet compose_masks(const std::vector<MaskSet>& masks, const std::vector<Shape>& shapes) {
  MaskSet out = full_mask(shapes);
  for (const auto& m : masks) {
    if (m.shapes != shapes) throw ShapeError("compose_masks: incongruent mask shapes");
    for (std::size_t j = 0; j < out.layers.size(); ++j) {
      for (std::size_t i = 0; i < out.layers[j].size(); ++i) out.layers[j][i] &= m.layers[j][i];
    }
  }
  return out;
}

Parameters apply_mask(const Parameters& params, const MaskSet& mask) {
  check_congruent(mask, params);
  Parameters out = params;
  for (std::size_t j = 0; j < out.layers.size(); ++j) {
    auto& w = out.layers[j].weights;
    const auto& m = mask.layers[j];
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!m[i]) w[i] = 0.0;
    }
  }
  return out;
}

double sparsity(const MaskSet& mask) {
  const std::size_t total = mask.total_count();
  if (total == 0) return 0.0;
  return static_cast<double>(mask.surviving_count()) / static_cast<double>(total);
}

}  // namespace ticketforge
