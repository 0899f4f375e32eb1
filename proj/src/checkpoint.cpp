#include "ticketforge/checkpoint.hpp"

#include <fmt/format.h>
#include <fstream>

#include "ticketforge/error.hpp"
#include "ticketforge/mask_io.hpp"
#include "ticketforge/pruning.hpp"

namespace ticketforge {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "ticketforge-checkpoint";
}

json spec_to_json(const NetworkSpec& spec) {
  json layers = json::array();
  for (const Layer& l : spec.layers) {
    if (const auto* d = std::get_if<Dense>(&l)) {
      layers.push_back({{"type", "dense"}, {"fan_in", d->fan_in}, {"fan_out", d->fan_out}});
    } else if (const auto* c = std::get_if<Conv2d>(&l)) {
      layers.push_back({{"type", "conv2d"},
                        {"in_ch", c->in_ch},
                        {"out_ch", c->out_ch},
                        {"kernel", c->kernel},
                        {"stride", c->stride}});
    } else if (std::holds_alternative<ReLU>(l)) {
      layers.push_back({{"type", "relu"}});
    } else if (const auto* p = std::get_if<MaxPool>(&l)) {
      layers.push_back({{"type", "maxpool"}, {"window", p->window}});
    } else {
      layers.push_back({{"type", "flatten"}});
    }
  }
  return {{"layers", layers}, {"input_shape", spec.input_shape}, {"num_classes", spec.num_classes}};
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec spec;
  try {
    spec.input_shape = j.at("input_shape").get<Shape>();
    spec.num_classes = j.at("num_classes").get<std::size_t>();
    for (const json& l : j.at("layers")) {
      const std::string type = l.at("type").get<std::string>();
      if (type == "dense") {
        spec.layers.emplace_back(Dense{l.at("fan_in"), l.at("fan_out")});
      } else if (type == "conv2d") {
        spec.layers.emplace_back(Conv2d{l.at("in_ch"), l.at("out_ch"), l.at("kernel"), l.at("stride")});
      } else if (type == "relu") {
        spec.layers.emplace_back(ReLU{});
      } else if (type == "maxpool") {
        spec.layers.emplace_back(MaxPool{l.at("window")});
      } else if (type == "flatten") {
        spec.layers.emplace_back(Flatten{});
      } else {
        throw InvalidSpecError(fmt::format("unknown layer type '{}'", type));
      }
    }
  } catch (const json::exception& e) {
    throw InvalidSpecError(fmt::format("malformed network description: {}", e.what()));
  }
  validate(spec);
  return spec;
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  json layers = json::array();
  for (const auto& l : ckpt.params.layers) {
    layers.push_back({{"weight_shape", l.weight_shape}, {"weights", l.weights}, {"biases", l.biases}});
  }
  return {{"format", kFormat},
          {"version", 1},
          {"run_id", ckpt.run_id},
          {"stage", ckpt.stage},
          {"network", spec_to_json(ckpt.spec)},
          {"params", layers},
          {"mask", to_hex(serialize_mask(ckpt.mask))}};
}

Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint c;
  try {
    if (j.at("format") != kFormat || j.at("version") != 1) {
      throw Error("not a version-1 ticketforge checkpoint");
    }
    c.run_id = j.at("run_id").get<std::string>();
    c.stage = j.at("stage").get<std::size_t>();
    c.spec = spec_from_json(j.at("network"));
    for (const json& l : j.at("params")) {
      c.params.layers.push_back({l.at("weight_shape").get<Shape>(),
                                 l.at("weights").get<std::vector<double>>(),
                                 l.at("biases").get<std::vector<double>>()});
    }
    c.mask = deserialize_mask(from_hex(j.at("mask").get<std::string>()));
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed checkpoint: {}", e.what()));
  }
  check_congruent(c.spec, c.params);
  check_congruent(c.mask, c.params);
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << checkpoint_to_json(ckpt).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()), e.byte);
  }
  return checkpoint_from_json(j);
}

}  // namespace ticketforge
