// ticketforge: lottery-ticket search experiments from the command line.

#include <CLI11.hpp>
#include <cstdlib>
#include <fmt/format.h>
#include <fstream>
#include <iostream>

#include "ticketforge/checkpoint.hpp"
#include "ticketforge/config.hpp"
#include "ticketforge/error.hpp"
#include "ticketforge/experiment.hpp"
#include "ticketforge/report.hpp"
#include "ticketforge/ticket_search.hpp"
#include "ticketforge/trajectory.hpp"

namespace tf = ticketforge;

int main(int argc, char** argv) {
  CLI::App app{"Iterative LAMP ticket search with trajectory-length probes"};
  app.require_subcommand(1);
  app.fallthrough();

  std::size_t jobs = 0;
  bool jobs_set = false;
  std::string data_dir;
  bool resume = true;
  app.add_option_function<std::size_t>(
         "--jobs", [&](std::size_t n) { jobs = n; jobs_set = true; },
         "Parallel runs (0 = all cores)");
  app.add_option("--data-dir", data_dir, "Directory holding MNIST/CIFAR-10 files")
      ->envname("TICKETFORGE_DATA_DIR");
  app.add_flag("--resume,!--no-resume", resume, "Skip runs already in runs.jsonl (default on)");

  std::string config_path, dir, checkpoint_path, dump_path;
  std::size_t points = 1000;
  std::uint64_t seed = 0;
  double radius = 1.0;

  auto* search = app.add_subcommand("search", "Run a ticket-search experiment");
  search->add_option("config", config_path, "Experiment config (JSON)")->required();

  auto* validate = app.add_subcommand("validate", "Check a config against the schema");
  validate->add_option("config", config_path, "Experiment config (JSON)")->required();

  auto* metrics = app.add_subcommand("metrics", "Recompute summary.csv from runs.jsonl");
  metrics->add_option("dir", dir, "Artifact directory")->required();

  auto* report = app.add_subcommand("report", "Write plot-data CSVs from runs.jsonl");
  report->add_option("dir", dir, "Artifact directory")->required();

  auto* trajectory = app.add_subcommand("trajectory", "Trajectory length of one checkpoint");
  trajectory->add_option("checkpoint", checkpoint_path, "Checkpoint JSON")->required();
  trajectory->add_option("--points", points, "Probe points on the circle")->capture_default_str();
  trajectory->add_option("--seed", seed, "Probe/projection seed (an experiment's master_seed)")
      ->capture_default_str();
  trajectory->add_option("--radius", radius, "Probe radius")->capture_default_str();
  trajectory->add_option("--dump", dump_path, "Write projected points as CSV (t,p1,p2)");

  CLI11_PARSE(app, argc, argv);

  const std::optional<std::string> data_override =
      data_dir.empty() ? std::nullopt : std::optional<std::string>(data_dir);
  try {
    if (*search) {
      const tf::ExperimentConfig cfg = tf::load_config(config_path, data_override);
      tf::RunOptions opts;
      if (jobs_set) opts.jobs = jobs;
      opts.resume = resume;
      opts.log = &std::cerr;
      const tf::ExperimentResult r = tf::run_experiment(cfg, opts);
      fmt::print("{}: {} runs ({} executed, {} resumed, {} failed)\n", r.dir.string(), r.n_total,
                 r.executed, r.skipped, r.failed);
      if (r.all_failed) {
        fmt::print(stderr, "error: every run failed\n");
        return 2;
      }
    } else if (*validate) {
      const tf::ExperimentConfig cfg = tf::load_config(config_path, data_override);
      fmt::print("{}: ok ({} architectures, {} runs each, digest {})\n", config_path,
                 cfg.architectures.size(), cfg.n_runs, tf::config_digest(cfg));
    } else if (*metrics) {
      fmt::print("{}\n", tf::write_summary(dir).string());
    } else if (*report) {
      for (const auto& p : tf::emit_reports(dir)) fmt::print("{}\n", p.string());
    } else if (*trajectory) {
      const tf::Checkpoint ckpt = tf::load_checkpoint(checkpoint_path);
      tf::RngState rng = tf::RngState(seed).fork("probe");
      const tf::TrajectoryProbe probe = tf::make_trajectory_probe(ckpt.spec, points, radius, rng);
      const tf::TrajectoryResult r =
          tf::measure(ckpt.spec, ckpt.params, ckpt.mask, probe.circle, probe.projection);
      fmt::print("{:.17g}\n", r.length);
      if (!dump_path.empty()) {
        std::ofstream out(dump_path);
        if (!out) throw tf::Error(fmt::format("cannot write {}", dump_path));
        tf::write_trajectory_csv(out, probe.circle, r);
      }
    }
  } catch (const tf::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
