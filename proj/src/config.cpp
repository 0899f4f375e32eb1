#include "ticketforge/config.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

#include "ticketforge/error.hpp"
#include "ticketforge/rng.hpp"

namespace ticketforge {

using nlohmann::json;

namespace {

// Strict reader over one JSON object: records every problem instead of
// stopping at the first, and flags keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where, std::vector<std::string>& errors)
      : obj_(obj), where_(std::move(where)), errors_(errors) {
    if (!obj_.is_object()) error("", "must be an object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return obj_.is_object() && obj_.contains(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key, obj_.at(key), fallback);
  }

  template <class T>
  std::optional<T> required(const std::string& key) {
    if (!has(key)) {
      error(key, "is required");
      return std::nullopt;
    }
    T dummy{};
    const json& v = obj_.at(key);
    T out = convert<T>(key, v, dummy);
    return out;
  }

  const json* child(const std::string& key) {
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  void error(const std::string& key, const std::string& msg) {
    errors_.push_back(fmt::format("{}: {}", path(key), msg));
  }

  std::string path(const std::string& key) const {
    if (key.empty()) return where_.empty() ? "<root>" : where_;
    return where_.empty() ? key : where_ + "." + key;
  }

  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [key, _] : obj_.items()) {
      if (known_.count(key)) continue;
      std::string best;
      std::size_t best_d = std::string::npos;
      for (const auto& k : known_) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      const bool close = !best.empty() && (best_d <= std::max<std::size_t>(3, key.size() / 2) ||
                                           best.rfind(key, 0) == 0 || key.rfind(best, 0) == 0);
      errors_.push_back(close ? fmt::format("{}: unknown key; did you mean '{}'?", path(key), best)
                              : fmt::format("{}: unknown key", path(key)));
    }
  }

 private:
  template <class T>
  T convert(const std::string& key, const json& v, T fallback) {
    if constexpr (std::is_same_v<T, bool>) {
      if (v.is_boolean()) return v.get<bool>();
      error(key, "must be a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (v.is_string()) return v.get<std::string>();
      error(key, "must be a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (v.is_number_unsigned()) return v.get<T>();
      if (v.is_number_integer()) {
        error(key, fmt::format("must be non-negative, got {}", v.get<std::int64_t>()));
      } else {
        error(key, "must be a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (v.is_number()) return v.get<T>();
      error(key, "must be a number");
    } else {
      if (v.is_array()) {
        try {
          return v.get<T>();
        } catch (const json::exception&) {
        }
      }
      error(key, "has the wrong element type");
    }
    return fallback;
  }

  const json& obj_;
  std::string where_;
  std::vector<std::string>& errors_;
  std::set<std::string> known_;
};

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return fmt::format("line {}, column {}", line, col);
}

std::optional<DataSource> parse_source(const std::string& s) {
  if (s == "two_moons") return DataSource::kTwoMoons;
  if (s == "gaussian_blobs") return DataSource::kGaussianBlobs;
  if (s == "mnist_idx") return DataSource::kMnistIdx;
  if (s == "cifar10_binary") return DataSource::kCifar10Binary;
  return std::nullopt;
}

std::vector<std::string> required_files(DataSource s) {
  switch (s) {
    case DataSource::kMnistIdx:
      return {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
              "t10k-labels-idx1-ubyte"};
    case DataSource::kCifar10Binary:
      return {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin",
              "data_batch_4.bin", "data_batch_5.bin", "test_batch.bin"};
    default:
      return {};
  }
}

bool is_synthetic(DataSource s) {
  return s == DataSource::kTwoMoons || s == DataSource::kGaussianBlobs;
}

// Training-set size the synthetic splitter will produce.
std::size_t synthetic_train_size(const DatasetSpec& d) {
  const auto n = d.n_samples;
  const auto n_test = static_cast<std::size_t>(std::floor(d.test_fraction * static_cast<double>(n)));
  const std::size_t rest = n - std::min(n, n_test);
  const auto n_val = static_cast<std::size_t>(std::floor(d.val_fraction * static_cast<double>(rest)));
  std::size_t train = rest - std::min(rest, n_val);
  if (d.max_train != 0) train = std::min(train, d.max_train);
  return train;
}

DatasetSpec read_dataset(const json& node, std::vector<std::string>& errors) {
  ObjectReader r(node, "dataset", errors);
  DatasetSpec d;
  if (auto src = r.required<std::string>("source")) {
    if (auto s = parse_source(*src)) {
      d.source = *s;
    } else {
      r.error("source", fmt::format("unknown source '{}' (expected two_moons, gaussian_blobs, "
                                    "mnist_idx or cifar10_binary)",
                                    *src));
    }
  }
  d.n_samples = r.get("n_samples", d.n_samples);
  d.noise = r.get("noise", d.noise);
  d.dim = r.get("dim", d.dim);
  d.centers = r.get("centers", d.centers);
  d.cluster_std = r.get("cluster_std", d.cluster_std);
  d.center_box = r.get("center_box", d.center_box);
  d.test_fraction = r.get("test_fraction", d.test_fraction);
  d.val_fraction = r.get("val_fraction", d.val_fraction);
  d.max_train = r.get("max_train", d.max_train);
  d.max_test = r.get("max_test", d.max_test);
  if (const json* norm = r.child("normalize")) {
    ObjectReader nr(*norm, "dataset.normalize", errors);
    d.norm_mean = nr.get("mean", d.norm_mean);
    d.norm_std = nr.get("std", d.norm_std);
    nr.finish();
  }
  d.data_dir = r.get("data_dir", d.data_dir);
  r.finish();

  if (!(d.val_fraction > 0.0 && d.val_fraction < 1.0)) {
    errors.push_back(fmt::format("dataset.val_fraction: must lie in (0, 1), got {}", d.val_fraction));
  }
  if (!(d.norm_std > 0.0)) errors.push_back("dataset.normalize.std: must be positive");
  if (is_synthetic(d.source)) {
    if (!(d.test_fraction > 0.0 && d.test_fraction < 1.0)) {
      errors.push_back(
          fmt::format("dataset.test_fraction: must lie in (0, 1), got {}", d.test_fraction));
    }
    if (d.n_samples < 10) errors.push_back("dataset.n_samples: must be at least 10");
    if (d.noise < 0.0) errors.push_back("dataset.noise: must be non-negative");
    if (d.source == DataSource::kGaussianBlobs) {
      if (d.dim < 2) errors.push_back("dataset.dim: must be at least 2");
      if (d.centers < 2) errors.push_back("dataset.centers: must be at least 2");
      if (d.cluster_std < 0.0) errors.push_back("dataset.cluster_std: must be non-negative");
      if (!(d.center_box > 0.0)) errors.push_back("dataset.center_box: must be positive");
    }
  }
  return d;
}

TrainConfig read_train(const json& node, std::vector<std::string>& errors) {
  ObjectReader r(node, "search.train", errors);
  TrainConfig t;
  t.learning_rate = r.get("learning_rate", t.learning_rate);
  t.batch_size = r.get("batch_size", t.batch_size);
  t.max_epochs = r.get("max_epochs", t.max_epochs);
  t.patience = r.get("patience", t.patience);
  t.min_delta = r.get("min_delta", t.min_delta);
  r.finish();
  if (!(t.learning_rate > 0.0)) errors.push_back("search.train.learning_rate: must be positive");
  if (t.batch_size == 0) errors.push_back("search.train.batch_size: must be positive");
  if (t.max_epochs == 0) errors.push_back("search.train.max_epochs: must be positive");
  if (t.min_delta < 0.0) errors.push_back("search.train.min_delta: must be non-negative");
  return t;
}

json train_to_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate},
          {"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"min_delta", t.min_delta}};
}

}  // namespace

const char* source_name(DataSource s) {
  switch (s) {
    case DataSource::kTwoMoons: return "two_moons";
    case DataSource::kGaussianBlobs: return "gaussian_blobs";
    case DataSource::kMnistIdx: return "mnist_idx";
    case DataSource::kCifar10Binary: return "cifar10_binary";
  }
  return "?";
}

Shape DatasetSpec::input_shape() const {
  switch (source) {
    case DataSource::kTwoMoons: return {2};
    case DataSource::kGaussianBlobs: return {dim};
    case DataSource::kMnistIdx: return {1, 28, 28};
    case DataSource::kCifar10Binary: return {3, 32, 32};
  }
  return {};
}

std::size_t DatasetSpec::num_classes() const {
  switch (source) {
    case DataSource::kTwoMoons: return 2;
    case DataSource::kGaussianBlobs: return centers;
    default: return 10;
  }
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

NetworkSpec build_architecture(const json& entry, const Shape& input_shape,
                               std::size_t num_classes) {
  std::vector<std::string> errors;
  ObjectReader r(entry, "architecture", errors);
  const std::string id = r.get<std::string>("id", "");
  const std::string type = r.get<std::string>("type", "mlp");
  NetworkSpec spec;
  if (type == "mlp") {
    const auto hidden = r.get<std::vector<std::size_t>>("hidden", {});
    if (input_shape.size() == 1) {
      spec = mlp_spec(input_shape[0], hidden, num_classes);
    } else {
      spec = mlp_spec(shape_size(input_shape), hidden, num_classes);
      spec.input_shape = input_shape;
      spec.layers.insert(spec.layers.begin(), Flatten{});
    }
  } else if (type == "lenet5") {
    if (input_shape.size() != 3) throw ConfigError("lenet5 needs image-shaped inputs");
    spec = lenet5_spec(input_shape[0], input_shape[1], input_shape[2], num_classes);
  } else if (type == "layers") {
    spec.input_shape = input_shape;
    spec.num_classes = num_classes;
    const json* layers = r.child("layers");
    if (layers == nullptr || !layers->is_array()) {
      throw ConfigError(fmt::format("architecture '{}': 'layers' must be an array", id));
    }
    Shape shape = input_shape;
    for (std::size_t i = 0; i < layers->size(); ++i) {
      ObjectReader lr((*layers)[i], fmt::format("architecture '{}'.layers[{}]", id, i), errors);
      const std::string kind = lr.get<std::string>("type", "");
      Layer layer;
      if (kind == "dense") {
        layer = Dense{shape_size(shape), lr.get<std::size_t>("out", 0)};
      } else if (kind == "conv2d") {
        layer = Conv2d{shape.empty() ? 0 : shape[0], lr.get<std::size_t>("out_ch", 0),
                       lr.get<std::size_t>("kernel", 3), lr.get<std::size_t>("stride", 1)};
      } else if (kind == "relu") {
        layer = ReLU{};
      } else if (kind == "maxpool") {
        layer = MaxPool{lr.get<std::size_t>("window", 2)};
      } else if (kind == "flatten") {
        layer = Flatten{};
      } else {
        lr.error("type", fmt::format("unknown layer type '{}'", kind));
        lr.finish();
        continue;
      }
      lr.finish();
      if (!errors.empty()) break;
      // Dense after a multi-dimensional activation needs an explicit Flatten.
      if (std::holds_alternative<Dense>(layer) && shape.size() != 1) {
        throw ConfigError(fmt::format(
            "architecture '{}'.layers[{}]: dense layer after shape {} needs a flatten layer", id,
            i, shape_string(shape)));
      }
      spec.layers.push_back(layer);
      // Running shape for the next layer's fan-in.
      {
        Shape cur = input_shape;
        for (const Layer& l : spec.layers) {
          if (const auto* d = std::get_if<Dense>(&l)) {
            cur = {d->fan_out};
          } else if (const auto* c = std::get_if<Conv2d>(&l)) {
            if (cur.size() != 3 || cur[1] < c->kernel || cur[2] < c->kernel || c->stride == 0) {
              throw ConfigError(fmt::format("architecture '{}'.layers[{}]: conv2d does not fit "
                                            "input shape {}",
                                            id, i, shape_string(cur)));
            }
            cur = {c->out_ch, (cur[1] - c->kernel) / c->stride + 1,
                   (cur[2] - c->kernel) / c->stride + 1};
          } else if (const auto* p = std::get_if<MaxPool>(&l)) {
            if (cur.size() != 3 || p->window == 0 || cur[1] < p->window || cur[2] < p->window) {
              throw ConfigError(fmt::format("architecture '{}'.layers[{}]: maxpool does not fit "
                                            "input shape {}",
                                            id, i, shape_string(cur)));
            }
            cur = {cur[0], cur[1] / p->window, cur[2] / p->window};
          } else if (std::holds_alternative<Flatten>(l)) {
            cur = {shape_size(cur)};
          }
        }
        shape = cur;
      }
    }
  } else {
    r.error("type", fmt::format("unknown architecture type '{}' (expected mlp, lenet5 or layers)",
                                type));
  }
  r.finish();
  if (!errors.empty()) {
    std::string msg = "invalid architecture:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  try {
    validate(spec);
  } catch (const InvalidSpecError& e) {
    throw ConfigError(fmt::format("architecture '{}': {}", id, e.what()));
  }
  return spec;
}

ExperimentConfig parse_config(const std::string& text, const std::optional<std::string>& data_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config parse error at {}: {}", line_col(text, e.byte), e.what()));
  }

  std::vector<std::string> errors;
  ObjectReader r(root, "", errors);
  ExperimentConfig cfg;
  cfg.name = r.required<std::string>("name").value_or("");
  cfg.master_seed = r.get<std::uint64_t>("master_seed", 0);
  cfg.n_runs = r.get("n_runs", cfg.n_runs);
  cfg.jobs = r.get("jobs", cfg.jobs);
  cfg.save_checkpoints = r.get("save_checkpoints", cfg.save_checkpoints);
  cfg.output_dir = r.get<std::string>("output_dir", cfg.name.empty() ? "out" : cfg.name);

  if (const json* ds = r.child("dataset")) {
    cfg.dataset = read_dataset(*ds, errors);
  } else {
    errors.push_back("dataset: is required");
  }
  if (data_dir) cfg.dataset.data_dir = *data_dir;

  if (const json* s = r.child("search")) {
    ObjectReader sr(*s, "search", errors);
    cfg.search.K = sr.get("K", cfg.search.K);
    cfg.search.prune_fraction = sr.get("prune_fraction", cfg.search.prune_fraction);
    if (const json* t = sr.child("train")) cfg.search.train = read_train(*t, errors);
    sr.finish();
  }
  if (const json* p = r.child("probe")) {
    ObjectReader pr(*p, "probe", errors);
    cfg.search.probe_points = pr.get("n_points", cfg.search.probe_points);
    cfg.search.probe_radius = pr.get("radius", cfg.search.probe_radius);
    pr.finish();
  }

  const json* archs = r.child("architectures");
  r.finish();

  if (cfg.name.empty() && r.has("name")) errors.push_back("name: must be non-empty");
  if (cfg.n_runs < 1) errors.push_back("n_runs: must be at least 1");
  try {
    validate(cfg.search);
  } catch (const ConfigError& e) {
    errors.push_back(fmt::format("search: {}", e.what()));
  }

  if (archs == nullptr) {
    errors.push_back("architectures: is required");
  } else if (!archs->is_array() || archs->empty()) {
    errors.push_back("architectures: must be a non-empty array");
  } else {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < archs->size(); ++i) {
      const json& entry = (*archs)[i];
      const std::string id =
          entry.is_object() && entry.contains("id") && entry["id"].is_string()
              ? entry["id"].get<std::string>()
              : "";
      if (id.empty()) {
        errors.push_back(fmt::format("architectures[{}].id: is required", i));
        continue;
      }
      if (!ids.insert(id).second) {
        errors.push_back(fmt::format("architectures[{}].id: duplicate id '{}'", i, id));
        continue;
      }
      try {
        ArchitectureConfig a;
        a.id = id;
        a.source = entry;
        if (!a.source.contains("type")) a.source["type"] = "mlp";
        a.spec = build_architecture(entry, cfg.dataset.input_shape(), cfg.dataset.num_classes());
        cfg.architectures.push_back(std::move(a));
      } catch (const Error& e) {
        errors.push_back(fmt::format("architectures[{}]: {}", i, e.what()));
      }
    }
  }

  if (is_synthetic(cfg.dataset.source)) {
    const std::size_t n_train = synthetic_train_size(cfg.dataset);
    if (cfg.search.train.batch_size > n_train) {
      errors.push_back(fmt::format("search.train.batch_size: {} exceeds the training set size {}",
                                   cfg.search.train.batch_size, n_train));
    }
  } else {
    if (cfg.dataset.data_dir.empty()) {
      errors.push_back(fmt::format("dataset.data_dir: {} needs a data directory (config, "
                                   "--data-dir or TICKETFORGE_DATA_DIR)",
                                   source_name(cfg.dataset.source)));
    } else {
      for (const auto& f : required_files(cfg.dataset.source)) {
        const auto p = std::filesystem::path(cfg.dataset.data_dir) / f;
        if (!std::filesystem::exists(p)) {
          errors.push_back(fmt::format("dataset: missing file {}", p.string()));
        }
      }
    }
  }

  if (!errors.empty()) {
    std::string msg = fmt::format("config has {} error(s):", errors.size());
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::string>& data_dir) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), data_dir);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

json to_json(const ExperimentConfig& cfg) {
  json archs = json::array();
  for (const auto& a : cfg.architectures) archs.push_back(a.source);
  const DatasetSpec& d = cfg.dataset;
  json dataset = {{"source", source_name(d.source)},
                  {"val_fraction", d.val_fraction},
                  {"max_train", d.max_train},
                  {"max_test", d.max_test}};
  if (is_synthetic(d.source)) {
    dataset["n_samples"] = d.n_samples;
    dataset["noise"] = d.noise;
    dataset["test_fraction"] = d.test_fraction;
    if (d.source == DataSource::kGaussianBlobs) {
      dataset["dim"] = d.dim;
      dataset["centers"] = d.centers;
      dataset["cluster_std"] = d.cluster_std;
      dataset["center_box"] = d.center_box;
    }
  } else {
    dataset["normalize"] = {{"mean", d.norm_mean}, {"std", d.norm_std}};
    dataset["data_dir"] = d.data_dir;
  }
  return {{"name", cfg.name},
          {"master_seed", cfg.master_seed},
          {"n_runs", cfg.n_runs},
          {"architectures", archs},
          {"dataset", dataset},
          {"search",
           {{"K", cfg.search.K},
            {"prune_fraction", cfg.search.prune_fraction},
            {"train", train_to_json(cfg.search.train)}}},
          {"probe", {{"n_points", cfg.search.probe_points}, {"radius", cfg.search.probe_radius}}},
          {"output_dir", cfg.output_dir.string()},
          {"jobs", cfg.jobs},
          {"save_checkpoints", cfg.save_checkpoints}};
}

std::string config_digest(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  j.erase("jobs");
  j.erase("save_checkpoints");
  j["dataset"].erase("data_dir");
  return fmt::format("{:016x}", fnv1a64(j.dump()));
}

}  // namespace ticketforge
