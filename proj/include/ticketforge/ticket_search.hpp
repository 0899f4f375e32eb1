#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ticketforge/dataset.hpp"
#include "ticketforge/mask.hpp"
#include "ticketforge/network.hpp"
#include "ticketforge/nn.hpp"
#include "ticketforge/rng.hpp"
#include "ticketforge/trajectory.hpp"

namespace ticketforge {

struct TicketSearchConfig {
  /// Number of prune stages; K + 1 models are trained.
  std::size_t K = 5;
  double prune_fraction = 0.16;
  TrainConfig train;
  std::size_t probe_points = 1000;
  double probe_radius = 1.0;

  friend bool operator==(const TicketSearchConfig&, const TicketSearchConfig&) = default;
};

void validate(const TicketSearchConfig& cfg);

struct StageRecord {
  std::size_t k = 0;
  double surviving_fraction = 1.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double trajectory_length = 0.0;
  std::size_t epochs_run = 0;

  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

enum class RunStatus { kComplete, kFailed };

struct RunRecord {
  std::string run_id;
  std::string arch;
  std::uint64_t seed = 0;
  std::size_t K = 0;
  /// Dense stage first, then one entry per pruned stage.
  std::vector<StageRecord> stages;
  /// Chained digest of each stage mask M_0..M_{K-1}, as 16 hex digits.
  std::vector<std::string> mask_digests;
  RunStatus status = RunStatus::kComplete;
  std::string error;

  bool complete() const { return status == RunStatus::kComplete && stages.size() == K + 1; }
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct WinningTickets {
  bool success = false;
  std::optional<std::size_t> best_sparse;
  std::optional<std::size_t> sparsest_matching;

  friend bool operator==(const WinningTickets&, const WinningTickets&) = default;
};

/// Probe circle and output projection, frozen for a whole experiment.
struct TrajectoryProbe {
  CircleProbe circle;
  Projection2D projection;
};

TrajectoryProbe make_trajectory_probe(const NetworkSpec& spec, std::size_t n_points,
                                      double radius, RngState& rng);

/// Seen once per trained stage, before its record is written.
struct StageEvent {
  std::size_t k;
  const Parameters& init;     // θ_init
  const Parameters& start;    // weights training started from
  const Parameters& trained;
  const MaskSet& mask;        // cumulative mask the stage trained under
};
using StageObserver = std::function<void(const StageEvent&)>;

/// Train → LAMP-prune → rewind, K times, then train the last pruned model.
///
/// Stage k trains θ_init ⊙ Π_{i<k} M_i under that mask. After stage k < K
/// the stage mask M_k comes from select_prune on the trained weights. Random
/// streams: initialization uses rng.fork("init"), stage k trains with
/// rng.fork("train", k). A NumericalError during training marks the run
/// failed and keeps the stages finished so far.
RunRecord run_ticket_search(const NetworkSpec& spec, const DatasetSplits& data,
                            const TicketSearchConfig& cfg, const TrajectoryProbe& probe,
                            const RngState& rng, const StageObserver& observer = {});

/// Same, with the probe drawn from rng.fork("probe").
RunRecord run_ticket_search(const NetworkSpec& spec, const DatasetSplits& data,
                            const TicketSearchConfig& cfg, const RngState& rng,
                            const StageObserver& observer = {});

/// Winning tickets judged on test accuracy against stage 0. Equal accuracy
/// counts as matching; ties prefer the sparser stage.
WinningTickets identify_winning_tickets(const RunRecord& run);

}  // namespace ticketforge
