#include "ticketforge/metrics.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ticketforge/error.hpp"

namespace ticketforge {

AggregateStat aggregate(std::span<const double> values) {
  if (values.empty()) throw Error("aggregate of an empty sample");
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n), values.size()};
}

double success_rate(std::size_t n_success, std::size_t n_total) {
  if (n_total == 0) throw Error("success_rate with zero runs");
  if (n_success > n_total) throw Error("success_rate: more successes than runs");
  return static_cast<double>(n_success) / static_cast<double>(n_total) * 100.0;
}

double accuracy_gain(double a_sparse, double a_dense) {
  if (!(a_dense > 0.0)) throw Error(fmt::format("accuracy_gain needs a_dense > 0, got {}", a_dense));
  return (a_sparse - a_dense) / a_dense * 100.0;
}

double lts_score(double a_gain_pct, double success_rate_pct) {
  return a_gain_pct * (success_rate_pct / 100.0);
}

double tl_gain(double tl_sparse, double tl_dense) {
  if (!(tl_dense > 0.0)) throw Error(fmt::format("tl_gain needs tl_dense > 0, got {}", tl_dense));
  return (tl_sparse - tl_dense) / tl_dense * 100.0;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kDense: return "Dense";
    case Variant::kBestSparse: return "BestSparse";
    case Variant::kSparsestMatching: return "SparsestMatching";
  }
  return "?";
}

const VariantRow* ExperimentSummary::row(Variant v) const {
  for (const auto& r : rows) {
    if (r.variant == v) return &r;
  }
  return nullptr;
}

ExperimentSummary summarize(std::span<const RunRecord> runs) {
  if (runs.empty()) throw Error("summarize: no runs");
  ExperimentSummary s;
  s.arch = runs.front().arch;
  s.n_total = runs.size();

  struct Column {
    std::vector<double> tl, tl_gain, acc, acc_gain;
  };
  Column dense, best, sparsest;
  for (const RunRecord& run : runs) {
    if (run.arch != s.arch) {
      throw Error(fmt::format("summarize: mixed architectures '{}' and '{}'", s.arch, run.arch));
    }
    if (!run.complete()) continue;
    ++s.n_completed;
    const StageRecord& d = run.stages.front();
    dense.tl.push_back(d.trajectory_length);
    dense.tl_gain.push_back(0.0);
    dense.acc.push_back(d.test_acc);
    dense.acc_gain.push_back(0.0);

    const WinningTickets w = identify_winning_tickets(run);
    if (!w.success) continue;
    ++s.n_success;
    auto add = [&](Column& c, std::size_t k) {
      const StageRecord& st = run.stages[k];
      c.tl.push_back(st.trajectory_length);
      c.tl_gain.push_back(tl_gain(st.trajectory_length, d.trajectory_length));
      c.acc.push_back(st.test_acc);
      c.acc_gain.push_back(accuracy_gain(st.test_acc, d.test_acc));
    };
    add(best, *w.best_sparse);
    add(sparsest, *w.sparsest_matching);
  }
  if (s.n_completed == 0) {
    throw Error(fmt::format("summarize: no completed runs for '{}'", s.arch));
  }

  auto make_row = [](Variant v, const Column& c) {
    return VariantRow{v, aggregate(c.tl), aggregate(c.tl_gain), aggregate(c.acc),
                      aggregate(c.acc_gain)};
  };
  s.rows.push_back(make_row(Variant::kDense, dense));
  s.success_rate_pct = success_rate(s.n_success, s.n_total);
  if (s.n_success > 0) {
    s.rows.push_back(make_row(Variant::kBestSparse, best));
    s.rows.push_back(make_row(Variant::kSparsestMatching, sparsest));
    s.lts_score = lts_score(s.rows[1].acc_gain_pct.mean, s.success_rate_pct);
  }
  return s;
}

void write_summary_csv(std::ostream& out, std::span<const ExperimentSummary> summaries) {
  out << "# sparse-variant rows aggregate successful runs only; dense rows aggregate all "
         "completed runs; acc is a fraction, gains/sr/lts are percentages\n";
  out << kSummaryColumns << '\n';
  for (const auto& s : summaries) {
    for (const auto& r : s.rows) {
      fmt::print(out, "{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.2f},{:.6f}\n",
                 s.arch, variant_name(r.variant), r.trajectory_length.mean,
                 r.trajectory_length.std, r.tl_gain_pct.mean, r.tl_gain_pct.std, r.test_acc.mean,
                 r.test_acc.std, r.acc_gain_pct.mean, r.acc_gain_pct.std, s.success_rate_pct,
                 s.lts_score);
    }
  }
}

}  // namespace ticketforge
