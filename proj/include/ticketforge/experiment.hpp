#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>

#include "ticketforge/config.hpp"
#include "ticketforge/dataset.hpp"
#include "ticketforge/rng.hpp"

namespace ticketforge {

/// Builds disjoint train/val/test splits. Synthetic sources draw from
/// rng.fork("generate") and split with rng.fork("split"); file-backed
/// sources read the standard train/test files from spec.data_dir and carve
/// validation out of the training file with rng.fork("split").
DatasetSplits provision_dataset(const DatasetSpec& spec, const RngState& rng);

struct RunOptions {
  /// Overrides cfg.jobs; 0 means hardware concurrency.
  std::optional<std::size_t> jobs;
  /// When false an existing runs.jsonl is moved to runs.jsonl.bak first.
  bool resume = true;
  std::ostream* log = nullptr;
};

struct ExperimentResult {
  std::filesystem::path dir;
  std::size_t n_total = 0;
  std::size_t executed = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  bool all_failed = false;
};

/// Runs n_runs ticket searches per architecture and writes, under
/// cfg.output_dir: config.json, runs.jsonl (one fsynced line per finished
/// run), summary.csv and plots/*.csv.
///
/// Run i of every architecture uses seed derive_run_seed(master_seed, i).
/// The dataset comes from RngState(master_seed).fork("dataset") and the
/// trajectory probe from RngState(master_seed).fork("probe"), both shared
/// by every run. Runs already present in runs.jsonl are skipped. A
/// directory holding results of a different config digest is rejected, and
/// a lock file keeps two coordinators out of the same directory.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

}  // namespace ticketforge
