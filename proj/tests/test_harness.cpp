#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ticketforge/checkpoint.hpp"
#include "ticketforge/config.hpp"
#include "ticketforge/error.hpp"
#include "ticketforge/experiment.hpp"
#include "ticketforge/nn.hpp"
#include "ticketforge/pruning.hpp"
#include "ticketforge/report.hpp"

using namespace ticketforge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("tf_harness_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunLine line(const std::string& arch, std::size_t index, std::size_t params,
             std::vector<double> acc, std::vector<double> tl) {
  RunLine l;
  l.run.arch = arch;
  l.run.run_id = arch + "/" + std::to_string(index);
  l.run.K = acc.size() - 1;
  for (std::size_t k = 0; k < acc.size(); ++k) {
    l.run.stages.push_back({k, std::pow(0.84, static_cast<double>(k)), acc[k], acc[k], tl[k], 3});
  }
  l.run.mask_digests.assign(l.run.K, "00000000000000ff");
  l.run_index = index;
  l.param_count = params;
  l.config_digest = "0123456789abcdef";
  return l;
}

void write_jsonl(const fs::path& p, const std::vector<RunLine>& lines) {
  std::ofstream out(p, std::ios::binary);
  for (const RunLine& l : lines) out << run_to_json(l).dump() << '\n';
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig cfg = parse_config(R"({
    "name": "tiny",
    "master_seed": 42,
    "n_runs": 3,
    "dataset": {"source": "two_moons", "n_samples": 200},
    "search": {"K": 2, "prune_fraction": 0.2,
               "train": {"batch_size": 16, "max_epochs": 4, "patience": 2}},
    "probe": {"n_points": 30},
    "architectures": [{"id": "w8", "hidden": [8]}, {"id": "w4", "hidden": [4]}]
  })");
  cfg.output_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("plot data from a hand-built two-architecture log") {
  TempDir dir("reports");
  // Written big-first and out of run order; output must be sorted.
  write_jsonl(dir.path / "runs.jsonl",
              {line("big", 1, 100, {0.80, 0.84, 0.76}, {20, 18, 30}),
               line("big", 0, 100, {0.50, 0.60, 0.55}, {10, 12, 15}),
               line("small", 0, 10, {0.50, 0.55}, {10, 11}),
               line("big", 2, 100, {0.90, 0.85, 0.80}, {5, 5, 5})});
  emit_reports(dir.path);
  const fs::path plots = dir.path / "plots";
  CHECK(slurp(plots / "sr_by_arch.csv") ==
        "architecture,param_count,n_total,n_success,sr_pct\n"
        "small,10,1,1,100.00\n"
        "big,100,3,2,66.67\n");
  CHECK(slurp(plots / "acc_gain_by_arch.csv") ==
        "architecture,param_count,run_id,best_sparse_stage,acc_gain_pct\n"
        "small,10,small/0,1,10.000000\n"
        "big,100,big/0,1,20.000000\n"
        "big,100,big/1,1,5.000000\n");
  CHECK(slurp(plots / "lts_by_arch.csv") ==
        "architecture,param_count,acc_gain_mean,sr_pct,lts_score\n"
        "small,10,10.000000,100.00,10.000000\n"
        "big,100,12.500000,66.67,8.333333\n");
  CHECK(slurp(plots / "tl_gain_by_stage.csv") ==
        "architecture,param_count,stage,n,surviving_fraction_mean,tl_gain_mean,tl_gain_std\n"
        "small,10,0,1,1.000000,0.000000,0.000000\n"
        "small,10,1,1,0.840000,10.000000,0.000000\n"
        "big,100,0,3,1.000000,0.000000,0.000000\n"
        "big,100,1,3,0.840000,3.333333,12.472191\n"
        "big,100,2,3,0.705600,33.333333,23.570226\n");

  write_summary(dir.path);
  const std::string summary = slurp(dir.path / "summary.csv");
  CHECK(summary.find("small,Dense,") < summary.find("big,Dense,"));
  CHECK(summary.find("big,BestSparse,15.000000,3.000000,5.000000,15.000000,0.720000,0.120000,"
                     "12.500000,7.500000,66.67,8.333333") != std::string::npos);
}

TEST_CASE("run records round-trip and are schema-checked") {
  const RunLine l = line("a", 0, 5, {0.5, 0.6}, {1, 2});
  const auto j = run_to_json(l);
  CHECK(validate_run_json(j).empty());
  const RunLine back = run_from_json(j);
  CHECK(back.run == l.run);
  CHECK(back.param_count == 5);

  auto missing = j;
  missing.erase("stages");
  CHECK_FALSE(validate_run_json(missing).empty());
  auto extra = j;
  extra["bogus"] = 1;
  CHECK_FALSE(validate_run_json(extra).empty());
  auto lying = j;
  lying["success"] = false;
  CHECK_FALSE(validate_run_json(lying).empty());
  auto short_run = j;
  short_run["K"] = 3;
  CHECK_FALSE(validate_run_json(short_run).empty());

  TempDir dir("badline");
  {
    std::ofstream out(dir.path / "runs.jsonl");
    out << j.dump() << "\n{not json}\n";
  }
  try {
    read_runs_jsonl(dir.path / "runs.jsonl");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("experiment resume, determinism and digest checks") {
  TempDir dir("experiment");
  const ExperimentConfig cfg = tiny_config(dir.path / "a");
  RunOptions serial;
  serial.jobs = 1;
  const ExperimentResult first = run_experiment(cfg, serial);
  CHECK(first.n_total == 6);
  CHECK(first.executed == 6);
  CHECK_FALSE(first.all_failed);
  for (const char* f : {"config.json", "runs.jsonl", "summary.csv", "plots/sr_by_arch.csv",
                        "plots/acc_gain_by_arch.csv", "plots/lts_by_arch.csv",
                        "plots/tl_gain_by_stage.csv"}) {
    CHECK(fs::exists(dir.path / "a" / f));
  }
  const auto runs = read_runs_jsonl(dir.path / "a" / "runs.jsonl");
  CHECK(runs.size() == 6);
  const std::string summary = slurp(dir.path / "a" / "summary.csv");
  // w4 has fewer parameters, so it comes first.
  CHECK(summary.find("w4,Dense") < summary.find("w8,Dense"));

  SUBCASE("resume skips finished runs") {
    const ExperimentResult again = run_experiment(cfg, serial);
    CHECK(again.executed == 0);
    CHECK(again.skipped == 6);
    CHECK(slurp(dir.path / "a" / "summary.csv") == summary);
  }
  SUBCASE("a torn final line is repaired and that run redone") {
    const fs::path log = dir.path / "a" / "runs.jsonl";
    std::string text = slurp(log);
    text.resize(text.size() - 20);
    std::ofstream(log, std::ios::binary | std::ios::trunc) << text;
    const ExperimentResult again = run_experiment(cfg, serial);
    CHECK(again.executed == 1);
    CHECK(slurp(dir.path / "a" / "summary.csv") == summary);
  }
  SUBCASE("no-resume backs up the old log") {
    RunOptions fresh = serial;
    fresh.resume = false;
    const ExperimentResult again = run_experiment(cfg, fresh);
    CHECK(again.executed == 6);
    CHECK(fs::exists(dir.path / "a" / "runs.jsonl.bak"));
    CHECK(slurp(dir.path / "a" / "summary.csv") == summary);
  }
  SUBCASE("a different config is refused in the same directory") {
    ExperimentConfig other = cfg;
    other.master_seed = 7;
    CHECK_THROWS_AS(run_experiment(other, serial), ConfigError);
  }
  SUBCASE("parallel execution gives the same summary") {
    ExperimentConfig par = cfg;
    par.output_dir = dir.path / "b";
    RunOptions four;
    four.jobs = 4;
    run_experiment(par, four);
    CHECK(slurp(dir.path / "b" / "summary.csv") == summary);
  }
}

TEST_CASE("a held lock keeps a second coordinator out") {
  TempDir dir("lock");
  const ExperimentConfig cfg = tiny_config(dir.path / "out");
  fs::create_directories(cfg.output_dir);
  std::ofstream(cfg.output_dir / ".lock") << "12345\n";
  CHECK_THROWS_AS(run_experiment(cfg), Error);
}

TEST_CASE("checkpoint round trip") {
  const NetworkSpec spec{{Conv2d{1, 2, 3, 1}, ReLU{}, MaxPool{2}, Flatten{}, Dense{8, 3}},
                         {1, 6, 6},
                         3};
  RngState rng(1);
  Checkpoint c{spec, init_kaiming_uniform(spec, rng), full_mask(spec), "net/4", 2};
  c.mask.layers[1][5] = 0;
  c.params = apply_mask(c.params, c.mask);
  TempDir dir("ckpt");
  save_checkpoint(dir.path / "c.json", c);
  const Checkpoint back = load_checkpoint(dir.path / "c.json");
  CHECK(back.spec == c.spec);
  CHECK(back.params == c.params);
  CHECK(back.mask == c.mask);
  CHECK(back.run_id == "net/4");
  CHECK(back.stage == 2);
}
