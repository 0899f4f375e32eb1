#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ticketforge/mask.hpp"
#include "ticketforge/network.hpp"

namespace ticketforge {

/// A trained stage: architecture, weights and the mask it trained under.
struct Checkpoint {
  NetworkSpec spec;
  Parameters params;
  MaskSet mask;
  std::string run_id;
  std::size_t stage = 0;
};

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

/// JSON document; the mask is embedded as the hex of its binary record form.
nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ticketforge
