#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ticketforge/metrics.hpp"
#include "ticketforge/ticket_search.hpp"

namespace ticketforge {

/// One line of runs.jsonl.
struct RunLine {
  RunRecord run;
  std::string config_digest;
  std::size_t run_index = 0;
  std::size_t param_count = 0;
};

/// {run_id, run_index, seed, arch, param_count, config_digest,
///  stages: [{k, surviving_fraction, val_acc, test_acc, trajectory_length, epochs}],
///  mask_digests, success, best_sparse_stage, sparsest_matching_stage, status[, error]}
/// Ticket fields are derived from the stages; they are null when absent.
nlohmann::json run_to_json(const RunLine& line);
RunLine run_from_json(const nlohmann::json& j);

/// Schema violations of one runs.jsonl object; empty when valid. Checks
/// types, required keys, stage count K + 1 for complete runs, and that the
/// stored ticket fields agree with the stages.
std::vector<std::string> validate_run_json(const nlohmann::json& j);

/// Parses and validates every line; throws FormatError naming the line.
std::vector<RunLine> read_runs_jsonl(const std::filesystem::path& path);

/// Per-architecture summaries ordered by ascending parameter count (then
/// id). Runs are ordered by run_index before aggregation so the result does
/// not depend on file order. Architectures without a completed run are
/// skipped.
std::vector<ExperimentSummary> summarize_runs(const std::vector<RunLine>& runs);

/// Recomputes <dir>/summary.csv from <dir>/runs.jsonl.
std::filesystem::path write_summary(const std::filesystem::path& dir);

/// Writes the four plot-data CSVs (sr_by_arch, acc_gain_by_arch, lts_by_arch,
/// tl_gain_by_stage) under <dir>/plots and returns their paths.
std::vector<std::filesystem::path> emit_reports(const std::filesystem::path& dir);

}  // namespace ticketforge
