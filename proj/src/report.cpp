#include "ticketforge/report.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <map>

#include "ticketforge/error.hpp"

namespace ticketforge {

using nlohmann::json;

namespace {

json optional_index(const std::optional<std::size_t>& v) {
  return v ? json(*v) : json(nullptr);
}

struct ArchGroup {
  std::string arch;
  std::size_t param_count = 0;
  std::vector<const RunLine*> runs;
};

// Runs grouped by architecture: ascending parameter count, then id; runs
// inside a group ordered by run_index.
std::vector<ArchGroup> group_runs(const std::vector<RunLine>& runs) {
  std::map<std::string, ArchGroup> by_arch;
  for (const RunLine& r : runs) {
    ArchGroup& g = by_arch[r.run.arch];
    g.arch = r.run.arch;
    g.param_count = r.param_count;
    g.runs.push_back(&r);
  }
  std::vector<ArchGroup> groups;
  for (auto& [_, g] : by_arch) {
    std::sort(g.runs.begin(), g.runs.end(),
              [](const RunLine* a, const RunLine* b) { return a->run_index < b->run_index; });
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(), [](const ArchGroup& a, const ArchGroup& b) {
    return std::tie(a.param_count, a.arch) < std::tie(b.param_count, b.arch);
  });
  return groups;
}

std::vector<RunRecord> records(const ArchGroup& g) {
  std::vector<RunRecord> out;
  for (const RunLine* r : g.runs) out.push_back(r->run);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  return out;
}

}  // namespace

json run_to_json(const RunLine& line) {
  const RunRecord& run = line.run;
  json stages = json::array();
  for (const StageRecord& s : run.stages) {
    stages.push_back({{"k", s.k},
                      {"surviving_fraction", s.surviving_fraction},
                      {"val_acc", s.val_acc},
                      {"test_acc", s.test_acc},
                      {"trajectory_length", s.trajectory_length},
                      {"epochs", s.epochs_run}});
  }
  WinningTickets w;
  if (run.complete()) w = identify_winning_tickets(run);
  json j = {{"run_id", run.run_id},
            {"run_index", line.run_index},
            {"seed", run.seed},
            {"arch", run.arch},
            {"param_count", line.param_count},
            {"config_digest", line.config_digest},
            {"K", run.K},
            {"stages", stages},
            {"mask_digests", run.mask_digests},
            {"success", w.success},
            {"best_sparse_stage", optional_index(w.best_sparse)},
            {"sparsest_matching_stage", optional_index(w.sparsest_matching)},
            {"status", run.status == RunStatus::kComplete ? "complete" : "failed"}};
  if (!run.error.empty()) j["error"] = run.error;
  return j;
}

std::vector<std::string> validate_run_json(const json& j) {
  std::vector<std::string> errs;
  if (!j.is_object()) return {"run record must be a JSON object"};
  auto need = [&](const char* key, auto pred, const char* type) {
    if (!j.contains(key)) {
      errs.push_back(fmt::format("missing key '{}'", key));
      return false;
    }
    if (!pred(j.at(key))) {
      errs.push_back(fmt::format("'{}' must be {}", key, type));
      return false;
    }
    return true;
  };
  auto is_str = [](const json& v) { return v.is_string(); };
  auto is_uint = [](const json& v) { return v.is_number_unsigned(); };
  auto is_bool = [](const json& v) { return v.is_boolean(); };
  auto is_index_or_null = [](const json& v) { return v.is_null() || v.is_number_unsigned(); };
  auto is_arr = [](const json& v) { return v.is_array(); };

  need("run_id", is_str, "a string");
  need("run_index", is_uint, "a non-negative integer");
  need("seed", is_uint, "a non-negative integer");
  need("arch", is_str, "a string");
  need("param_count", is_uint, "a non-negative integer");
  need("config_digest", is_str, "a string");
  const bool has_k = need("K", is_uint, "a non-negative integer");
  const bool has_stages = need("stages", is_arr, "an array");
  need("mask_digests", is_arr, "an array");
  need("success", is_bool, "a boolean");
  need("best_sparse_stage", is_index_or_null, "a stage index or null");
  need("sparsest_matching_stage", is_index_or_null, "a stage index or null");
  const bool has_status = need("status", [](const json& v) {
    return v.is_string() && (v == "complete" || v == "failed");
  }, "\"complete\" or \"failed\"");
  for (const auto& [key, _] : j.items()) {
    static const std::vector<std::string> known = {
        "run_id", "run_index", "seed", "arch", "param_count", "config_digest", "K", "stages",
        "mask_digests", "success", "best_sparse_stage", "sparsest_matching_stage", "status",
        "error"};
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      errs.push_back(fmt::format("unknown key '{}'", key));
    }
  }
  if (!errs.empty() || !has_stages) return errs;

  const auto& stages = j.at("stages");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const json& s = stages[i];
    if (!s.is_object()) {
      errs.push_back(fmt::format("stages[{}] must be an object", i));
      continue;
    }
    for (const char* key : {"surviving_fraction", "val_acc", "test_acc", "trajectory_length"}) {
      if (!s.contains(key) || !s.at(key).is_number()) {
        errs.push_back(fmt::format("stages[{}].{} must be a number", i, key));
      }
    }
    for (const char* key : {"k", "epochs"}) {
      if (!s.contains(key) || !s.at(key).is_number_unsigned()) {
        errs.push_back(fmt::format("stages[{}].{} must be a non-negative integer", i, key));
      }
    }
    if (s.size() != 6) errs.push_back(fmt::format("stages[{}] must have exactly 6 keys", i));
    if (errs.empty() && s.at("k").get<std::size_t>() != i) {
      errs.push_back(fmt::format("stages[{}].k is {}", i, s.at("k").get<std::size_t>()));
    }
  }
  if (!errs.empty()) return errs;

  if (has_k && has_status && j.at("status") == "complete") {
    const std::size_t K = j.at("K").get<std::size_t>();
    if (stages.size() != K + 1) {
      errs.push_back(fmt::format("complete run has {} stages, expected K+1 = {}", stages.size(), K + 1));
      return errs;
    }
    if (j.at("mask_digests").size() != K) {
      errs.push_back(fmt::format("complete run has {} mask digests, expected {}",
                                 j.at("mask_digests").size(), K));
    }
    const RunLine line = run_from_json(j);
    const WinningTickets w = identify_winning_tickets(line.run);
    if (j.at("success").get<bool>() != w.success ||
        j.at("best_sparse_stage") != optional_index(w.best_sparse) ||
        j.at("sparsest_matching_stage") != optional_index(w.sparsest_matching)) {
      errs.push_back("ticket fields disagree with the recorded stages");
    }
  }
  return errs;
}

RunLine run_from_json(const json& j) {
  RunLine line;
  try {
    line.run.run_id = j.at("run_id").get<std::string>();
    line.run_index = j.at("run_index").get<std::size_t>();
    line.run.seed = j.at("seed").get<std::uint64_t>();
    line.run.arch = j.at("arch").get<std::string>();
    line.param_count = j.at("param_count").get<std::size_t>();
    line.config_digest = j.at("config_digest").get<std::string>();
    line.run.K = j.at("K").get<std::size_t>();
    for (const json& s : j.at("stages")) {
      line.run.stages.push_back({s.at("k").get<std::size_t>(), s.at("surviving_fraction").get<double>(),
                                 s.at("val_acc").get<double>(), s.at("test_acc").get<double>(),
                                 s.at("trajectory_length").get<double>(),
                                 s.at("epochs").get<std::size_t>()});
    }
    line.run.mask_digests = j.at("mask_digests").get<std::vector<std::string>>();
    line.run.status = j.at("status") == "complete" ? RunStatus::kComplete : RunStatus::kFailed;
    if (j.contains("error")) line.run.error = j.at("error").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed run record: {}", e.what()));
  }
  return line;
}

std::vector<RunLine> read_runs_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::vector<RunLine> runs;
  std::string text;
  std::size_t line_no = 0, offset = 0;
  while (std::getline(in, text)) {
    ++line_no;
    const std::size_t start = offset;
    offset += text.size() + 1;
    if (text.empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(fmt::format("{} line {}: {}", path.string(), line_no, e.what()), start);
    }
    const auto errs = validate_run_json(j);
    if (!errs.empty()) {
      throw FormatError(fmt::format("{} line {}: {}", path.string(), line_no, errs.front()), start);
    }
    runs.push_back(run_from_json(j));
  }
  return runs;
}

std::vector<ExperimentSummary> summarize_runs(const std::vector<RunLine>& runs) {
  std::vector<ExperimentSummary> out;
  for (const ArchGroup& g : group_runs(runs)) {
    const auto recs = records(g);
    if (std::none_of(recs.begin(), recs.end(), [](const RunRecord& r) { return r.complete(); })) {
      continue;
    }
    out.push_back(summarize(recs));
  }
  return out;
}

std::filesystem::path write_summary(const std::filesystem::path& dir) {
  const auto runs = read_runs_jsonl(dir / "runs.jsonl");
  if (runs.empty()) throw Error(fmt::format("{} has no runs", (dir / "runs.jsonl").string()));
  const auto summaries = summarize_runs(runs);
  const auto path = dir / "summary.csv";
  auto out = open_out(path);
  write_summary_csv(out, summaries);
  return path;
}

std::vector<std::filesystem::path> emit_reports(const std::filesystem::path& dir) {
  const auto runs = read_runs_jsonl(dir / "runs.jsonl");
  if (runs.empty()) throw Error(fmt::format("{} has no runs", (dir / "runs.jsonl").string()));
  const auto groups = group_runs(runs);
  const auto plots = dir / "plots";
  std::filesystem::create_directories(plots);

  std::vector<std::filesystem::path> paths = {plots / "sr_by_arch.csv", plots / "acc_gain_by_arch.csv",
                                              plots / "lts_by_arch.csv",
                                              plots / "tl_gain_by_stage.csv"};
  auto sr = open_out(paths[0]);
  auto acc = open_out(paths[1]);
  auto lts = open_out(paths[2]);
  auto tl = open_out(paths[3]);
  sr << "architecture,param_count,n_total,n_success,sr_pct\n";
  acc << "architecture,param_count,run_id,best_sparse_stage,acc_gain_pct\n";
  lts << "architecture,param_count,acc_gain_mean,sr_pct,lts_score\n";
  tl << "architecture,param_count,stage,n,surviving_fraction_mean,tl_gain_mean,tl_gain_std\n";

  for (const ArchGroup& g : groups) {
    std::size_t n_success = 0;
    std::vector<double> gains;
    std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> by_stage;
    for (const RunLine* line : g.runs) {
      const RunRecord& run = line->run;
      if (!run.complete()) continue;
      const StageRecord& dense = run.stages.front();
      for (const StageRecord& s : run.stages) {
        auto& [frac, gain] = by_stage[s.k];
        frac.push_back(s.surviving_fraction);
        gain.push_back(tl_gain(s.trajectory_length, dense.trajectory_length));
      }
      const WinningTickets w = identify_winning_tickets(run);
      if (!w.success) continue;
      ++n_success;
      const double gain = accuracy_gain(run.stages[*w.best_sparse].test_acc, dense.test_acc);
      gains.push_back(gain);
      fmt::print(acc, "{},{},{},{},{:.6f}\n", g.arch, g.param_count, run.run_id, *w.best_sparse,
                 gain);
    }
    const double sr_pct = success_rate(n_success, g.runs.size());
    fmt::print(sr, "{},{},{},{},{:.2f}\n", g.arch, g.param_count, g.runs.size(), n_success, sr_pct);
    const double gain_mean = gains.empty() ? 0.0 : aggregate(gains).mean;
    fmt::print(lts, "{},{},{:.6f},{:.2f},{:.6f}\n", g.arch, g.param_count, gain_mean, sr_pct,
               gains.empty() ? 0.0 : lts_score(gain_mean, sr_pct));
    for (const auto& [k, cols] : by_stage) {
      const AggregateStat f = aggregate(cols.first);
      const AggregateStat t = aggregate(cols.second);
      fmt::print(tl, "{},{},{},{},{:.6f},{:.6f},{:.6f}\n", g.arch, g.param_count, k, t.n, f.mean,
                 t.mean, t.std);
    }
  }
  return paths;
}

}  // namespace ticketforge
