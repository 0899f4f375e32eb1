#include "ticketforge/network.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "ticketforge/error.hpp"

namespace ticketforge {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  return fmt::format("[{}]", fmt::join(shape, ","));
}

bool is_parameterized(const Layer& layer) {
  return std::holds_alternative<Dense>(layer) || std::holds_alternative<Conv2d>(layer);
}

std::string layer_name(const Layer& layer) {
  return std::visit(
      overloaded{
          [](const Dense& d) { return fmt::format("Dense({}->{})", d.fan_in, d.fan_out); },
          [](const Conv2d& c) {
            return fmt::format("Conv2d({}->{}, k={}, s={})", c.in_ch, c.out_ch, c.kernel,
                               c.stride);
          },
          [](const ReLU&) { return std::string("ReLU"); },
          [](const MaxPool& p) { return fmt::format("MaxPool({})", p.window); },
          [](const Flatten&) { return std::string("Flatten"); },
      },
      layer);
}

std::vector<Shape> validate(const NetworkSpec& spec) {
  if (spec.num_classes < 2) {
    throw InvalidSpecError(
        fmt::format("num_classes must be at least 2, got {}", spec.num_classes));
  }
  if (spec.input_shape.empty() || shape_size(spec.input_shape) == 0) {
    throw InvalidSpecError("input_shape must be non-empty with positive dimensions");
  }
  std::vector<Shape> shapes{spec.input_shape};
  bool has_params = false;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Shape& in = shapes.back();
    const Layer& layer = spec.layers[i];
    auto fail = [&](const std::string& why) {
      return InvalidSpecError(fmt::format("layer {} {}: {} (input shape {})", i,
                                          layer_name(layer), why, shape_string(in)));
    };
    Shape out = std::visit(
        overloaded{
            [&](const Dense& d) -> Shape {
              if (d.fan_in == 0 || d.fan_out == 0) throw fail("zero fan_in or fan_out");
              if (in.size() != 1 || in[0] != d.fan_in) throw fail("expects a flat input of fan_in");
              return {d.fan_out};
            },
            [&](const Conv2d& c) -> Shape {
              if (c.in_ch == 0 || c.out_ch == 0 || c.kernel == 0 || c.stride == 0) {
                throw fail("zero channel count, kernel or stride");
              }
              if (in.size() != 3 || in[0] != c.in_ch) throw fail("expects [in_ch, H, W]");
              if (in[1] < c.kernel || in[2] < c.kernel) throw fail("kernel larger than input");
              return {c.out_ch, (in[1] - c.kernel) / c.stride + 1,
                      (in[2] - c.kernel) / c.stride + 1};
            },
            [&](const ReLU&) -> Shape { return in; },
            [&](const MaxPool& p) -> Shape {
              if (p.window == 0) throw fail("zero window");
              if (in.size() != 3) throw fail("expects [C, H, W]");
              if (in[1] < p.window || in[2] < p.window) throw fail("window larger than input");
              return {in[0], in[1] / p.window, in[2] / p.window};
            },
            [&](const Flatten&) -> Shape { return {shape_size(in)}; },
        },
        layer);
    has_params = has_params || is_parameterized(layer);
    shapes.push_back(std::move(out));
  }
  if (!has_params) throw InvalidSpecError("network has no parameterized layer");
  const Shape& out = shapes.back();
  if (out.size() != 1 || out[0] != spec.num_classes) {
    throw InvalidSpecError(fmt::format("network output shape {} does not equal [{}]",
                                       shape_string(out), spec.num_classes));
  }
  return shapes;
}

std::vector<std::size_t> parameterized_layers(const NetworkSpec& spec) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (is_parameterized(spec.layers[i])) idx.push_back(i);
  }
  return idx;
}

Shape weight_shape(const Layer& layer) {
  if (const auto* d = std::get_if<Dense>(&layer)) return {d->fan_out, d->fan_in};
  if (const auto* c = std::get_if<Conv2d>(&layer)) {
    return {c->out_ch, c->in_ch, c->kernel, c->kernel};
  }
  return {};
}

std::size_t bias_count(const Layer& layer) {
  if (const auto* d = std::get_if<Dense>(&layer)) return d->fan_out;
  if (const auto* c = std::get_if<Conv2d>(&layer)) return c->out_ch;
  return 0;
}

std::size_t fan_in(const Layer& layer) {
  if (const auto* d = std::get_if<Dense>(&layer)) return d->fan_in;
  if (const auto* c = std::get_if<Conv2d>(&layer)) return c->in_ch * c->kernel * c->kernel;
  return 0;
}

std::size_t parameter_count(const NetworkSpec& spec) {
  std::size_t n = 0;
  for (const auto& layer : spec.layers) {
    if (is_parameterized(layer)) n += shape_size(weight_shape(layer)) + bias_count(layer);
  }
  return n;
}

std::size_t weight_count(const NetworkSpec& spec) {
  std::size_t n = 0;
  for (const auto& layer : spec.layers) {
    if (is_parameterized(layer)) n += shape_size(weight_shape(layer));
  }
  return n;
}

std::size_t Parameters::total_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

std::size_t Parameters::weight_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size();
  return n;
}

bool Parameters::all_finite() const {
  for (const auto& l : layers) {
    for (double w : l.weights) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : l.biases) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

Parameters zeros_like(const NetworkSpec& spec) {
  Parameters p;
  for (std::size_t i : parameterized_layers(spec)) {
    const Layer& layer = spec.layers[i];
    LayerParams lp;
    lp.weight_shape = weight_shape(layer);
    lp.weights.assign(shape_size(lp.weight_shape), 0.0);
    lp.biases.assign(bias_count(layer), 0.0);
    p.layers.push_back(std::move(lp));
  }
  return p;
}

Parameters zeros_like(const Parameters& params) {
  Parameters p;
  p.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    p.layers.push_back({l.weight_shape, std::vector<double>(l.weights.size(), 0.0),
                        std::vector<double>(l.biases.size(), 0.0)});
  }
  return p;
}

void check_congruent(const NetworkSpec& spec, const Parameters& params) {
  const auto idx = parameterized_layers(spec);
  if (idx.size() != params.layers.size()) {
    throw ShapeError(fmt::format("parameters have {} layers, network has {}",
                                 params.layers.size(), idx.size()));
  }
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const Layer& layer = spec.layers[idx[j]];
    const LayerParams& lp = params.layers[j];
    const Shape ws = weight_shape(layer);
    if (lp.weight_shape != ws || lp.weights.size() != shape_size(ws) ||
        lp.biases.size() != bias_count(layer)) {
      throw ShapeError(fmt::format("parameter layer {} does not match {}", j,
                                   layer_name(layer)));
    }
  }
}

NetworkSpec mlp_spec(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                     std::size_t num_classes) {
  NetworkSpec spec;
  spec.input_shape = {input_dim};
  spec.num_classes = num_classes;
  std::size_t prev = input_dim;
  for (std::size_t width : hidden) {
    spec.layers.emplace_back(Dense{prev, width});
    spec.layers.emplace_back(ReLU{});
    prev = width;
  }
  spec.layers.emplace_back(Dense{prev, num_classes});
  return spec;
}

NetworkSpec lenet5_spec(std::size_t channels, std::size_t height, std::size_t width,
                        std::size_t num_classes) {
  NetworkSpec spec;
  spec.input_shape = {channels, height, width};
  spec.num_classes = num_classes;
  if (height < 16 || width < 16) {
    throw InvalidSpecError("lenet5 needs inputs of at least 16x16");
  }
  const std::size_t h = ((height - 4) / 2 - 4) / 2;
  const std::size_t w = ((width - 4) / 2 - 4) / 2;
  spec.layers = {Conv2d{channels, 6, 5, 1}, ReLU{},       MaxPool{2},
                 Conv2d{6, 16, 5, 1},       ReLU{},       MaxPool{2},
                 Flatten{},                 Dense{16 * h * w, 120},
                 ReLU{},                    Dense{120, 84}, ReLU{},
                 Dense{84, num_classes}};
  return spec;
}

}  // namespace ticketforge
