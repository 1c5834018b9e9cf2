#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fleetlab/episode.hpp"

namespace fleetlab {

enum class SatMode { Micro, Macro };

/// Micro: served / requested over the day. Macro: mean of per-region ratios
/// over regions with demand. Both are 1 when nothing was requested.
double satisfaction_rate(const EpisodeTrace& trace, SatMode mode);

/// $1.00 unlock + $0.39 per minute, in cents, rounded half-up per trip.
/// Durations are resolved to the millisecond first so the result is exact.
std::int64_t trip_price_cents(double duration_s);
std::int64_t trip_revenue_cents(std::span<const double> durations_s);

inline constexpr std::int64_t kAsmvUnitCostCents = 100'000;
inline constexpr std::int64_t kChargeCostCents = 400;

enum class RevenueScope { AsmvTrips, AllTrips };

struct LedgerRow {
  int day = 0;  // 0 = deployment, before the first operating day
  std::int64_t trip_revenue = 0;
  std::int64_t charging_cost = 0;
  std::int64_t deployment_cost = 0;
  std::int64_t net = 0;             // this row
  std::int64_t cumulative_net = 0;  // through this row
};

/// All amounts in cents. net = trip_revenue - charging_cost - deployment_cost
/// on every row and in the totals.
struct EconLedger {
  std::vector<LedgerRow> rows;
  std::int64_t trip_revenue = 0, charging_cost = 0, deployment_cost = 0, net = 0;
  std::optional<int> break_even_day;  // first day with cumulative_net >= 0
};

/// Ledger from per-day revenue and charge-event counts.
EconLedger net_revenue(std::span<const std::int64_t> daily_revenue_cents, int asmv_count,
                       std::span<const int> daily_charge_events);

/// One charge event per operational ASMV that ends the day below capacity.
int charge_events(const EpisodeTrace& trace);
std::int64_t trace_revenue_cents(const EpisodeTrace& trace, RevenueScope scope);
EconLedger net_revenue(const std::vector<EpisodeTrace>& days, int asmv_count, RevenueScope scope);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// P(sqrt(ne) * D_max > lambda) under the asymptotic Kolmogorov law.
double kolmogorov_survival(double lambda);

/// Two-sample test: sup |ECDF_a - ECDF_b| with the asymptotic p-value at
/// effective size n*m/(n+m).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Requests per [interval][region] of one day.
struct DayCounts {
  std::vector<std::vector<double>> counts;
  double satisfaction = 1.0;
};

DayCounts day_counts(const EpisodeTrace& trace);
DayCounts day_counts(const DemandTensor& demand, double satisfaction);

inline constexpr double kLowPerformanceThreshold = 0.85;

/// Splits days into (satisfaction < threshold, the rest).
std::pair<std::vector<DayCounts>, std::vector<DayCounts>> split_by_performance(
    const std::vector<DayCounts>& days, double threshold = kLowPerformanceThreshold);

/// Mean per-day trip counts of the low set minus those of the other set.
struct DiffReport {
  std::vector<double> per_region;  // by region
  std::vector<double> per_hour;    // by interval
  double total_increase_pct = 0.0; // relative to the other set's mean daily total
  std::size_t low_days = 0, other_days = 0;
};

DiffReport diff_report(const std::vector<DayCounts>& low, const std::vector<DayCounts>& other);

struct SweepRow {
  std::string axis;  // "ratio", "fault" or "background"
  double value = 0.0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one replication
  int replications = 0;
};

/// Builds one row from replicated satisfaction values.
SweepRow summarize(std::string axis, double value, std::span<const double> samples);
/// Orders rows by axis, then value.
void sort_rows(std::vector<SweepRow>& rows);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_sweep_json(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace fleetlab
