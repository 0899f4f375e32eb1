#include "ticketforge/ticket_search.hpp"

#include <cmath>
#include <fmt/format.h>

#include "ticketforge/error.hpp"
#include "ticketforge/mask_io.hpp"
#include "ticketforge/pruning.hpp"

namespace ticketforge {

void validate(const TicketSearchConfig& cfg) {
  if (cfg.K < 1) throw ConfigError("K must be at least 1");
  if (!(cfg.prune_fraction > 0.0 && cfg.prune_fraction < 1.0)) {
    throw ConfigError(fmt::format("prune_fraction must lie in (0, 1), got {}", cfg.prune_fraction));
  }
  if (!(std::pow(1.0 - cfg.prune_fraction, static_cast<double>(cfg.K)) > 0.0)) {
    throw ConfigError("(1 - prune_fraction)^K underflows to zero");
  }
  if (cfg.probe_points < 3) throw ConfigError("probe n_points must be at least 3");
  if (!(cfg.probe_radius > 0.0)) throw ConfigError("probe radius must be positive");
}

TrajectoryProbe make_trajectory_probe(const NetworkSpec& spec, std::size_t n_points,
                                      double radius, RngState& rng) {
  RngState circle_rng = rng.fork("circle");
  RngState proj_rng = rng.fork("projection");
  return {make_probe(shape_size(spec.input_shape), n_points, radius, circle_rng),
          make_projection(spec.num_classes, proj_rng)};
}

RunRecord run_ticket_search(const NetworkSpec& spec, const DatasetSplits& data,
                            const TicketSearchConfig& cfg, const TrajectoryProbe& probe,
                            const RngState& rng, const StageObserver& observer) {
  validate(cfg);
  validate(spec);

  RunRecord run;
  run.seed = rng.seed();
  run.K = cfg.K;

  RngState init_rng = rng.fork("init");
  const Parameters theta_init = init_kaiming_uniform(spec, init_rng);
  const std::vector<Shape> shapes = full_mask(spec).shapes;

  std::vector<MaskSet> history;
  MaskSet cumulative = full_mask(shapes);
  std::uint64_t digest = 0;

  for (std::size_t k = 0; k <= cfg.K; ++k) {
    // Rewind: θ_k = θ_init ⊙ Π_{i<k} M_i.
    const Parameters start = apply_mask(theta_init, compose_masks(history, shapes));
    RngState train_rng = rng.fork("train", k);
    TrainResult trained;
    try {
      trained = train_until_early_stop(spec, start, cumulative, data.train, data.val, cfg.train,
                                       train_rng);
    } catch (const NumericalError& e) {
      run.status = RunStatus::kFailed;
      run.error = fmt::format("stage {}: {}", k, e.what());
      return run;
    }

    StageRecord stage;
    stage.k = k;
    stage.surviving_fraction = sparsity(cumulative);
    stage.val_acc = trained.val_acc;
    stage.test_acc = evaluate_accuracy(spec, trained.params, cumulative, data.test);
    stage.trajectory_length =
        measure(spec, trained.params, cumulative, probe.circle, probe.projection).length;
    stage.epochs_run = trained.epochs_run;
    if (observer) observer(StageEvent{k, theta_init, start, trained.params, cumulative});
    run.stages.push_back(stage);

    if (k == cfg.K) break;
    const PruneResult pruned =
        select_prune(lamp_scores(trained.params, cumulative), cumulative, cfg.prune_fraction);
    history.push_back(pruned.mask);
    cumulative = compose_masks(history, shapes);
    if (cumulative != pruned.mask) {
      throw std::logic_error("mask product differs from the latest nested mask");
    }
    digest = mask_digest(pruned.mask, digest);
    run.mask_digests.push_back(fmt::format("{:016x}", digest));
  }
  return run;
}

RunRecord run_ticket_search(const NetworkSpec& spec, const DatasetSplits& data,
                            const TicketSearchConfig& cfg, const RngState& rng,
                            const StageObserver& observer) {
  RngState probe_rng = rng.fork("probe");
  const TrajectoryProbe probe =
      make_trajectory_probe(spec, cfg.probe_points, cfg.probe_radius, probe_rng);
  return run_ticket_search(spec, data, cfg, probe, rng, observer);
}

WinningTickets identify_winning_tickets(const RunRecord& run) {
  if (!run.complete()) {
    throw Error(fmt::format("run {} is incomplete ({} of {} stages)", run.run_id,
                            run.stages.size(), run.K + 1));
  }
  const double dense = run.stages.front().test_acc;
  WinningTickets w;
  for (std::size_t k = 1; k < run.stages.size(); ++k) {
    const StageRecord& s = run.stages[k];
    if (s.test_acc < dense) continue;
    w.success = true;
    // Later stages are sparser under nested pruning, so >= prefers them.
    if (!w.best_sparse || s.test_acc >= run.stages[*w.best_sparse].test_acc) w.best_sparse = k;
    if (!w.sparsest_matching ||
        s.surviving_fraction <= run.stages[*w.sparsest_matching].surviving_fraction) {
      w.sparsest_matching = k;
    }
  }
  return w;
}

}  // namespace ticketforge
