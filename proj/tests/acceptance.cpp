// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any of them fails.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "ticketforge/config.hpp"
#include "ticketforge/experiment.hpp"
#include "ticketforge/metrics.hpp"
#include "ticketforge/pruning.hpp"
#include "ticketforge/report.hpp"
#include "ticketforge/ticket_search.hpp"
#include "ticketforge/trajectory.hpp"

using namespace ticketforge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome lamp_oracle() {
  const auto t0 = Clock::now();
  RngState rng(1001);
  double worst = 0.0;
  std::size_t largest = 0;
  for (int layer = 0; layer < 200; ++layer) {
    // Log-uniform sizes in [1, 10^4], with both ends forced once.
    std::size_t n = static_cast<std::size_t>(std::exp(rng.uniform(0.0, std::log(1e4))));
    if (layer == 0) n = 1;
    if (layer == 1) n = 10000;
    n = std::clamp<std::size_t>(n, 1, 10000);
    largest = std::max(largest, n);
    std::vector<double> w(n);
    for (double& v : w) {
      const double u = rng.uniform();
      if (u < 0.1) v = 0.0;
      else if (u < 0.3) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * 0.125 * static_cast<double>(1 + rng.below(3));
      else v = rng.normal();
    }
    Parameters p;
    p.layers.push_back({{1, n}, w, {0.0}});
    MaskSet m = full_mask(p);
    if (layer % 2 == 1) {
      for (auto& bit : m.layers[0]) bit = rng.uniform() < 0.8 ? 1 : 0;
    }
    const auto got = lamp_scores(p, m).layers[0];
    const auto want = oracle::brute_force_lamp(w, m.layers[0]);
    for (std::size_t i = 0; i < n; ++i) {
      if (got[i] == want[i]) continue;
      worst = std::max(worst, std::abs(got[i] - want[i]) / std::max(std::abs(got[i]), std::abs(want[i])));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 30.0,
          fmt::format("200 layers up to {} weights, worst rel err {:.3g}, {:.1f} s", largest,
                      worst, secs)};
}

Outcome rewind_exactness() {
  RngState rng(77);
  Split all = make_two_moons(400, 0.15, rng);
  DatasetSplits data = split_dataset(std::move(all), 0.2, 0.1, rng);
  TicketSearchConfig cfg;
  cfg.K = 5;
  cfg.train.max_epochs = 10;
  cfg.train.batch_size = 16;
  cfg.probe_points = 50;
  const NetworkSpec spec = mlp_spec(2, {32, 32}, 2);
  std::size_t compared = 0, mismatched = 0, runs = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RunRecord r = run_ticket_search(
        spec, data, cfg, RngState(derive_run_seed(5, seed)), [&](const StageEvent& e) {
          for (std::size_t j = 0; j < e.mask.layers.size(); ++j) {
            const auto& w0 = e.init.layers[j].weights;
            const auto& ws = e.start.layers[j].weights;
            for (std::size_t i = 0; i < w0.size(); ++i) {
              if (!e.mask.layers[j][i]) continue;
              ++compared;
              if (std::memcmp(&w0[i], &ws[i], sizeof(double)) != 0) ++mismatched;
            }
          }
        });
    if (r.complete()) ++runs;
  }
  return {runs == 10 && mismatched == 0 && compared > 0,
          fmt::format("{} complete runs, {} surviving weights compared, {} mismatches", runs,
                      compared, mismatched)};
}

Outcome sparsity_schedule() {
  // 998*1000 + 1000*2 = 10^6 weights.
  const NetworkSpec spec{{Dense{998, 1000}, ReLU{}, Dense{1000, 2}}, {998}, 2};
  RngState rng(3);
  Split all = make_gaussian_blobs(80, 998, 2, 1.0, 1.0, rng);
  DatasetSplits data = split_dataset(std::move(all), 0.25, 0.2, rng);
  TicketSearchConfig cfg;
  cfg.K = 5;
  cfg.prune_fraction = 0.16;
  cfg.train.max_epochs = 1;
  cfg.train.batch_size = 16;
  cfg.probe_points = 4;
  const RunRecord r = run_ticket_search(spec, data, cfg, RngState(9));
  if (!r.complete()) return {false, "run did not complete: " + r.error};
  const double got = r.stages.back().surviving_fraction;
  const double want = std::pow(0.84, 5);
  return {weight_count(spec) == 1000000 && std::abs(got - want) < 1e-3,
          fmt::format("{} weights, final surviving fraction {:.7f} vs {:.7f}", weight_count(spec),
                      got, want)};
}

Outcome gradient_check() {
  const std::vector<NetworkSpec> specs = {
      mlp_spec(4, {6, 5}, 3),
      NetworkSpec{{Conv2d{2, 3, 3, 1}, ReLU{}, MaxPool{2}, Flatten{}, Dense{12, 4}}, {2, 7, 7}, 4},
      NetworkSpec{{Conv2d{1, 2, 3, 2}, ReLU{}, Flatten{}, Dense{18, 2}}, {1, 7, 7}, 2}};
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const NetworkSpec& spec : specs) {
      RngState rng(seed);
      const Parameters params = init_kaiming_uniform(spec, rng);
      MaskSet mask = full_mask(params);
      for (auto& l : mask.layers)
        for (auto& bit : l) bit = rng.uniform() < 0.8 ? 1 : 0;
      const std::size_t batch = 3;
      const auto x = oracle::random_inputs(batch * shape_size(spec.input_shape), rng);
      std::vector<int> y(batch);
      for (auto& v : y) v = static_cast<int>(rng.below(spec.num_classes));
      const LossAndGrads lg = loss_and_grads(spec, params, mask, x, y);
      for (std::size_t j = 0; j < params.layers.size(); ++j) {
        for (int which = 0; which < 2; ++which) {
          const std::size_t n =
              which == 0 ? params.layers[j].weights.size() : params.layers[j].biases.size();
          for (std::size_t i = 0; i < n; ++i) {
            if (which == 0 && !mask.layers[j][i]) continue;
            Parameters plus = params, minus = params;
            (which == 0 ? plus.layers[j].weights[i] : plus.layers[j].biases[i]) += h;
            (which == 0 ? minus.layers[j].weights[i] : minus.layers[j].biases[i]) -= h;
            const double numeric = (oracle::naive_loss(spec, plus, mask, x, y) -
                                    oracle::naive_loss(spec, minus, mask, x, y)) /
                                   (2.0 * h);
            const double analytic =
                which == 0 ? lg.grads.layers[j].weights[i] : lg.grads.layers[j].biases[i];
            worst = std::max(worst, oracle::grad_rel_error(analytic, numeric));
            ++checked;
          }
        }
      }
    }
  }
  return {worst < 1e-4, fmt::format("dense/conv/pool/relu/flatten, 5 seeds, {} partials, worst "
                                    "rel err {:.3g}",
                                    checked, worst)};
}

Outcome trajectory_analytic() {
  const NetworkSpec spec{{Dense{2, 2}}, {2}, 2};
  auto length = [&](std::size_t n, double c) {
    Parameters p = zeros_like(spec);
    p.layers[0].weights = {c, 0.0, 0.0, c};
    const CircleProbe probe = make_probe({1.0, 0.0}, {0.0, 1.0}, n, 1.0);
    return measure(spec, p, full_mask(p), probe, make_projection({1.0, 0.0}, {0.0, 1.0})).length;
  };
  double worst_poly = 0.0, worst_scale = 0.0;
  for (std::size_t n : {4u, 100u, 1000u}) {
    const double want = 2.0 * static_cast<double>(n) * std::sin(std::numbers::pi / static_cast<double>(n));
    worst_poly = std::max(worst_poly, std::abs(length(n, 1.0) - want) / want);
    for (double c : {0.25, 3.0, 10.0}) {
      const double base = length(n, 1.0);
      worst_scale = std::max(worst_scale, std::abs(length(n, c) - c * base) / (c * base));
    }
  }
  return {worst_poly <= 1e-9 && worst_scale <= 1e-12,
          fmt::format("polygon rel err {:.3g}, scaling rel err {:.3g}", worst_poly, worst_scale)};
}

Outcome depth_growth() {
  auto median_tl = [](std::size_t depth) {
    std::vector<double> tls;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const RngState rng(seed);
      const NetworkSpec spec = mlp_spec(2, std::vector<std::size_t>(depth, 32), 2);
      RngState init_rng = rng.fork("init");
      const Parameters p = init_gaussian(spec, 4.0, 0.0, init_rng);
      RngState probe_rng = rng.fork("probe");
      const TrajectoryProbe probe = make_trajectory_probe(spec, 1000, 1.0, probe_rng);
      tls.push_back(measure(spec, p, full_mask(p), probe.circle, probe.projection).length);
    }
    std::sort(tls.begin(), tls.end());
    return (tls[9] + tls[10]) / 2.0;
  };
  const double d2 = median_tl(2), d8 = median_tl(8);
  return {d8 > d2, fmt::format("median TL depth 2 = {:.4g}, depth 8 = {:.4g}", d2, d8)};
}

Outcome metric_arithmetic() {
  const double sr = success_rate(34, 50);
  const double ag = accuracy_gain(68.65, 67.92);
  const double tg = tl_gain(321.56, 264.60);
  // Hand-worked fixture: per-run gains 20% and 5%, 2 of 3 runs succeed.
  // LTS = 12.5 * (66.666.../100) = 8.3333...
  auto run = [](std::vector<double> acc) {
    RunRecord r;
    r.arch = "fixture";
    r.K = acc.size() - 1;
    for (std::size_t k = 0; k < acc.size(); ++k)
      r.stages.push_back({k, std::pow(0.84, static_cast<double>(k)), 0.0, acc[k], 1.0, 1});
    return r;
  };
  const std::vector<RunRecord> runs = {run({0.50, 0.60, 0.55}), run({0.80, 0.84, 0.76}),
                                       run({0.90, 0.85, 0.80})};
  const ExperimentSummary s = summarize(runs);
  const double lts_want = 12.5 * 2.0 / 3.0;
  const bool ok = sr == 68.0 && std::abs(ag - 1.0748) <= 1e-4 && std::abs(tg - 21.53) <= 0.01 &&
                  std::abs(s.lts_score - lts_want) <= 1e-12 && lts_score(4.0, 50.0) == 2.0;
  return {ok, fmt::format("SR {:.1f}, A_gain {:.4f}, TL_gain {:.2f}, fixture LTS {:.6f}", sr, ag,
                          tg, s.lts_score)};
}

struct DeskState {
  bool ran = false;
  fs::path dir;
  double seconds = 0.0;
  std::vector<ExperimentSummary> summaries;
};

Outcome desk_experiment(const ExperimentConfig& base, const fs::path& work, DeskState& state) {
  ExperimentConfig cfg = base;
  cfg.output_dir = work / "desk_a";
  fs::remove_all(cfg.output_dir);
  RunOptions opts;
  opts.resume = false;
  const auto t0 = Clock::now();
  const ExperimentResult r = run_experiment(cfg, opts);
  state.seconds = seconds_since(t0);
  state.dir = cfg.output_dir;
  state.ran = true;

  std::vector<std::string> problems;
  std::vector<RunLine> runs;
  try {
    runs = read_runs_jsonl(cfg.output_dir / "runs.jsonl");
  } catch (const std::exception& e) {
    problems.push_back(e.what());
  }
  if (runs.size() != cfg.n_runs * cfg.architectures.size()) {
    problems.push_back(fmt::format("{} run records", runs.size()));
  }
  std::istringstream summary(slurp(cfg.output_dir / "summary.csv"));
  std::string header;
  while (std::getline(summary, header) && header.rfind('#', 0) == 0) {
  }
  if (header != kSummaryColumns) problems.push_back("summary.csv header mismatch");
  for (const char* f : {"sr_by_arch.csv", "acc_gain_by_arch.csv", "lts_by_arch.csv",
                        "tl_gain_by_stage.csv"}) {
    if (!fs::exists(cfg.output_dir / "plots" / f)) problems.push_back(fmt::format("missing {}", f));
  }
  state.summaries = summarize_runs(runs);
  double best_sr = 0.0;
  for (const auto& s : state.summaries) best_sr = std::max(best_sr, s.success_rate_pct);
  if (!(best_sr > 0.0)) problems.push_back("no architecture found a winning ticket");
  if (state.seconds >= 15.0 * 60.0) problems.push_back("over 15 minutes");

  const unsigned cores = std::thread::hardware_concurrency();
  std::string detail = fmt::format("{} runs ({} failed) in {:.0f} s on {} core(s), best SR {:.0f}%",
                                   r.n_total, r.failed, state.seconds, cores, best_sr);
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

Outcome lts_ordering(const DeskState& state) {
  if (!state.ran || state.summaries.empty()) return {false, "desk experiment produced no summary"};
  std::vector<const ExperimentSummary*> by_lts;
  for (const auto& s : state.summaries) by_lts.push_back(&s);
  std::stable_sort(by_lts.begin(), by_lts.end(),
                   [](const auto* a, const auto* b) { return a->lts_score > b->lts_score; });
  std::string order;
  for (const auto* s : by_lts) {
    if (!order.empty()) order += " > ";
    order += fmt::format("{} ({:.3f})", s->arch, s->lts_score);
  }
  // Summaries are already in ascending parameter order.
  bool decreasing = true;
  for (std::size_t i = 1; i < state.summaries.size(); ++i) {
    decreasing = decreasing && state.summaries[i].lts_score <= state.summaries[i - 1].lts_score;
  }
  return {true, fmt::format("LTS order {}; {}", order,
                            decreasing ? "non-increasing with size"
                                       : "not monotone in size (informational)")};
}

Outcome determinism(const ExperimentConfig& base, const fs::path& work, const DeskState& state) {
  if (!state.ran) return {false, "desk experiment did not run"};
  ExperimentConfig cfg = base;
  cfg.output_dir = work / "desk_b";
  fs::remove_all(cfg.output_dir);
  // A different worker count must not matter.
  RunOptions opts;
  opts.resume = false;
  opts.jobs = std::max(1u, std::thread::hardware_concurrency()) == 1 ? 2 : 1;
  run_experiment(cfg, opts);
  const std::string a = slurp(state.dir / "summary.csv");
  const std::string b = slurp(cfg.output_dir / "summary.csv");
  return {!a.empty() && a == b,
          fmt::format("rerun with {} worker(s): summary.csv {} ({} bytes)", *opts.jobs,
                      a == b ? "byte-identical" : "differs", a.size())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  fs::path work = "acceptance_work";
  fs::path config = TF_DESK_CONFIG;
  app.add_option("--work-dir", work, "scratch directory for experiment outputs");
  app.add_option("--config", config, "desk experiment config")->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    if (!o.pass) ++failures;
    fmt::print("{} criterion {:>2} {}: {}\n", o.pass ? "PASS" : "FAIL", id, name, o.detail);
    std::fflush(stdout);
  };

  ExperimentConfig desk;
  DeskState state;
  try {
    desk = load_config(config);
  } catch (const std::exception& e) {
    fmt::print(stderr, "{}\n", e.what());
  }

  report(1, "lamp oracle", lamp_oracle);
  report(2, "rewind exactness", rewind_exactness);
  report(3, "sparsity schedule", sparsity_schedule);
  report(4, "gradient check", gradient_check);
  report(5, "trajectory analytic cases", trajectory_analytic);
  report(6, "depth growth", depth_growth);
  report(7, "metric arithmetic", metric_arithmetic);
  report(8, "desk experiment", [&] { return desk_experiment(desk, work, state); });
  report(9, "lts ordering", [&] { return lts_ordering(state); });
  report(10, "determinism", [&] { return determinism(desk, work, state); });
  return failures == 0 ? 0 : 1;
}
