#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ticketforge/network.hpp"
#include "ticketforge/ticket_search.hpp"

namespace ticketforge {

enum class DataSource { kTwoMoons, kGaussianBlobs, kMnistIdx, kCifar10Binary };

const char* source_name(DataSource s);

struct DatasetSpec {
  DataSource source = DataSource::kTwoMoons;
  // Synthetic generators.
  std::size_t n_samples = 1000;
  double noise = 0.1;
  std::size_t dim = 2;
  std::size_t centers = 3;
  double cluster_std = 1.0;
  double center_box = 5.0;
  double test_fraction = 0.2;
  // Shared.
  double val_fraction = 0.1;
  std::size_t max_train = 0;  // 0 = no cap
  std::size_t max_test = 0;
  // File-backed: pixels are scaled to [0, 1], then (x - mean) / std.
  double norm_mean = 0.0;
  double norm_std = 1.0;
  std::string data_dir;

  Shape input_shape() const;
  std::size_t num_classes() const;
};

struct ArchitectureConfig {
  std::string id;
  nlohmann::json source;  // the architecture entry as written, with defaults
  NetworkSpec spec;
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t master_seed = 0;
  std::size_t n_runs = 50;
  std::vector<ArchitectureConfig> architectures;
  DatasetSpec dataset;
  TicketSearchConfig search;
  std::filesystem::path output_dir;
  std::size_t jobs = 0;  // 0 = hardware concurrency
  bool save_checkpoints = false;
};

/// Reads and validates a JSON config. Unknown keys are errors; every
/// violated constraint is listed in one ConfigError. `data_dir`, when set,
/// overrides dataset.data_dir.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::string>& data_dir = std::nullopt);
ExperimentConfig parse_config(const std::string& text,
                              const std::optional<std::string>& data_dir = std::nullopt);

/// Normalized config with every default filled in.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Content hash of everything that affects results (excludes output_dir,
/// jobs, data_dir and save_checkpoints), 16 hex digits.
std::string config_digest(const ExperimentConfig& cfg);

/// Levenshtein distance, for key suggestions.
std::size_t edit_distance(const std::string& a, const std::string& b);

/// Builds a network from an architecture entry for the given data shape.
NetworkSpec build_architecture(const nlohmann::json& entry, const Shape& input_shape,
                               std::size_t num_classes);

}  // namespace ticketforge
