#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace ticketforge {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Dense {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  friend bool operator==(const Dense&, const Dense&) = default;
};

/// Valid (unpadded) square convolution over [channels, height, width].
struct Conv2d {
  std::size_t in_ch = 0;
  std::size_t out_ch = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  friend bool operator==(const Conv2d&, const Conv2d&) = default;
};

struct ReLU {
  friend bool operator==(const ReLU&, const ReLU&) = default;
};

/// Non-overlapping max pooling; stride equals the window.
struct MaxPool {
  std::size_t window = 2;
  friend bool operator==(const MaxPool&, const MaxPool&) = default;
};

struct Flatten {
  friend bool operator==(const Flatten&, const Flatten&) = default;
};

using Layer = std::variant<Dense, Conv2d, ReLU, MaxPool, Flatten>;

bool is_parameterized(const Layer& layer);
std::string layer_name(const Layer& layer);

struct NetworkSpec {
  std::vector<Layer> layers;
  Shape input_shape;
  std::size_t num_classes = 0;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Checks that adjacent shapes compose and the output is [num_classes].
/// Returns the activation shape entering each layer plus the final output
/// shape (layers.size() + 1 entries). Throws InvalidSpecError.
std::vector<Shape> validate(const NetworkSpec& spec);

/// Indices into spec.layers of the Dense/Conv2d layers, in order.
std::vector<std::size_t> parameterized_layers(const NetworkSpec& spec);

/// Weight tensor shape: [fan_out, fan_in] for Dense, [out, in, k, k] for Conv2d.
Shape weight_shape(const Layer& layer);
std::size_t bias_count(const Layer& layer);
std::size_t fan_in(const Layer& layer);

/// Weights plus biases over all layers.
std::size_t parameter_count(const NetworkSpec& spec);
std::size_t weight_count(const NetworkSpec& spec);

struct LayerParams {
  Shape weight_shape;
  std::vector<double> weights;
  std::vector<double> biases;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// One entry per parameterized layer, in network order.
struct Parameters {
  std::vector<LayerParams> layers;

  std::size_t total_count() const;
  std::size_t weight_count() const;
  bool all_finite() const;

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

/// Zero-valued parameters shaped for `spec`.
Parameters zeros_like(const NetworkSpec& spec);
Parameters zeros_like(const Parameters& params);

/// Throws ShapeError unless `params` is congruent with `spec`.
void check_congruent(const NetworkSpec& spec, const Parameters& params);

/// input → [hidden[0] → ReLU → ...] → num_classes.
NetworkSpec mlp_spec(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                     std::size_t num_classes);

/// LeNet-5 layout without padding: conv5(6) → pool → conv5(16) → pool →
/// 120 → 84 → classes. Needs height and width of at least 16.
NetworkSpec lenet5_spec(std::size_t channels, std::size_t height, std::size_t width,
                        std::size_t num_classes);

}  // namespace ticketforge
