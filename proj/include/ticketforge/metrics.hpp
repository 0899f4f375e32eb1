#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ticketforge/ticket_search.hpp"

namespace ticketforge {

/// Mean and population standard deviation.
struct AggregateStat {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

AggregateStat aggregate(std::span<const double> values);

/// N_success / N_total × 100.
double success_rate(std::size_t n_success, std::size_t n_total);

/// (a_sparse − a_dense) / a_dense × 100.
double accuracy_gain(double a_sparse, double a_dense);

/// a_gain_pct × success_rate_pct / 100. The rate enters as a fraction so the
/// score stays in [0, 100] for gains up to 100%. Negative gains are not
/// clamped.
double lts_score(double a_gain_pct, double success_rate_pct);

/// (tl_sparse − tl_dense) / tl_dense × 100.
double tl_gain(double tl_sparse, double tl_dense);

enum class Variant { kDense, kBestSparse, kSparsestMatching };
const char* variant_name(Variant v);

struct VariantRow {
  Variant variant;
  AggregateStat trajectory_length;
  AggregateStat tl_gain_pct;
  AggregateStat test_acc;
  AggregateStat acc_gain_pct;
};

struct ExperimentSummary {
  std::string arch;
  /// Dense first; sparse rows only when at least one run succeeded.
  std::vector<VariantRow> rows;
  std::size_t n_total = 0;
  std::size_t n_completed = 0;
  std::size_t n_success = 0;
  double success_rate_pct = 0.0;
  double lts_score = 0.0;

  const VariantRow* row(Variant v) const;
};

/// Gains are computed per run against that run's own dense stage and then
/// averaged: over completed runs for Dense, over successful runs for the
/// sparse variants. SR counts every attempted run, failed ones included.
ExperimentSummary summarize(std::span<const RunRecord> runs);

/// Summary CSV: one row per (architecture, variant). Test accuracy is
/// a fraction in [0, 1]; gains, SR and LTS are percentages.
void write_summary_csv(std::ostream& out, std::span<const ExperimentSummary> summaries);

inline constexpr const char* kSummaryColumns =
    "architecture,variant,tl_mean,tl_std,tl_gain_mean,tl_gain_std,acc_mean,acc_std,"
    "acc_gain_mean,acc_gain_std,sr_pct,lts_score";

}  // namespace ticketforge
