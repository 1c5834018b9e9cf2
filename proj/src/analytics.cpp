#include "fleetlab/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include <json.hpp>

namespace fleetlab {

double satisfaction_rate(const EpisodeTrace& trace, SatMode mode) {
  if (mode == SatMode::Micro) return satisfaction_ratio(trace.served, trace.demand);
  std::vector<std::int64_t> served, requested;
  for (const auto& rec : trace.steps) {
    const auto& sat = rec.outcome.satisfied;
    const auto& uns = rec.outcome.unsatisfied;
    served.resize(std::max(served.size(), sat.size()), 0);
    requested.resize(served.size(), 0);
    for (std::size_t i = 0; i < sat.size(); ++i) {
      served[i] += sat[i];
      requested[i] += sat[i] + uns[i];
    }
  }
  double sum = 0.0;
  int regions = 0;
  for (std::size_t i = 0; i < requested.size(); ++i) {
    if (requested[i] == 0) continue;
    sum += static_cast<double>(served[i]) / static_cast<double>(requested[i]);
    ++regions;
  }
  return regions == 0 ? 1.0 : sum / regions;
}

std::int64_t trip_price_cents(double duration_s) {
  if (!(duration_s >= 0.0)) throw InputError("trip duration must be nonnegative");
  const std::int64_t ms = std::llround(duration_s * 1000.0);
  // 39 cents per 60000 ms, half-up: floor((2*39*ms + 60000) / 120000).
  return 100 + (78 * ms + 60000) / 120000;
}

std::int64_t trip_revenue_cents(std::span<const double> durations_s) {
  std::int64_t total = 0;
  for (double d : durations_s) total += trip_price_cents(d);
  return total;
}

EconLedger net_revenue(std::span<const std::int64_t> daily_revenue_cents, int asmv_count,
                       std::span<const int> daily_charge_events) {
  if (daily_revenue_cents.size() != daily_charge_events.size()) {
    throw InputError("revenue and charge series differ in length");
  }
  if (asmv_count < 0) throw InputError("ASMV count must be nonnegative");
  EconLedger ledger;
  LedgerRow deploy;
  deploy.deployment_cost = kAsmvUnitCostCents * asmv_count;
  deploy.net = -deploy.deployment_cost;
  deploy.cumulative_net = deploy.net;
  ledger.rows.push_back(deploy);
  std::int64_t cumulative = deploy.net;
  for (std::size_t d = 0; d < daily_revenue_cents.size(); ++d) {
    LedgerRow row;
    row.day = static_cast<int>(d) + 1;
    row.trip_revenue = daily_revenue_cents[d];
    row.charging_cost = kChargeCostCents * daily_charge_events[d];
    row.net = row.trip_revenue - row.charging_cost;
    cumulative += row.net;
    row.cumulative_net = cumulative;
    ledger.rows.push_back(row);
  }
  for (const auto& r : ledger.rows) {
    ledger.trip_revenue += r.trip_revenue;
    ledger.charging_cost += r.charging_cost;
    ledger.deployment_cost += r.deployment_cost;
    if (!ledger.break_even_day && r.cumulative_net >= 0) ledger.break_even_day = r.day;
  }
  ledger.net = ledger.trip_revenue - ledger.charging_cost - ledger.deployment_cost;
  return ledger;
}

int charge_events(const EpisodeTrace& trace) {
  if (trace.steps.empty()) return 0;
  const auto& last = trace.steps.back();
  int events = 0;
  for (std::size_t k = 0; k < last.asmv_batteries.size(); ++k) {
    const bool faulted = k < trace.asmv_faulted.size() && trace.asmv_faulted[k];
    if (!faulted && last.asmv_batteries[k] < trace.battery_capacity) ++events;
  }
  return events;
}

std::int64_t trace_revenue_cents(const EpisodeTrace& trace, RevenueScope scope) {
  std::int64_t total = 0;
  for (const auto& rec : trace.steps) {
    for (const auto& trip : rec.outcome.trips_served) {
      if (scope == RevenueScope::AllTrips || trip.served_by == ServedBy::Asmv) total += trip_price_cents(trip.duration_s);
    }
  }
  return total;
}

EconLedger net_revenue(const std::vector<EpisodeTrace>& days, int asmv_count, RevenueScope scope) {
  std::vector<std::int64_t> revenue;
  std::vector<int> charges;
  for (const auto& d : days) {
    revenue.push_back(trace_revenue_cents(d, scope));
    charges.push_back(charge_events(d));
  }
  return net_revenue(revenue, asmv_count, charges);
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.0) {
    // Dual theta series, fast for small lambda: CDF = sqrt(2 pi)/lambda * sum exp(-(2k-1)^2 pi^2 / (8 lambda^2)).
    double cdf = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * pi * pi / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-300) break;
    }
    cdf *= std::sqrt(2.0 * pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InputError("KS test needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = n * m / (n + m);
  return {d, kolmogorov_survival(std::sqrt(ne) * d)};
}

DayCounts day_counts(const EpisodeTrace& trace) {
  DayCounts day;
  day.satisfaction = satisfaction_rate(trace, SatMode::Micro);
  for (const auto& rec : trace.steps) {
    std::vector<double> row(rec.outcome.satisfied.size());
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = rec.outcome.satisfied[i] + rec.outcome.unsatisfied[i];
    day.counts.push_back(std::move(row));
  }
  return day;
}

DayCounts day_counts(const DemandTensor& demand, double satisfaction) {
  DayCounts day;
  day.satisfaction = satisfaction;
  for (int t = 0; t < demand.intervals(); ++t) {
    std::vector<double> row(demand.regions());
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = static_cast<double>(demand.origin_total(t, i));
    day.counts.push_back(std::move(row));
  }
  return day;
}

std::pair<std::vector<DayCounts>, std::vector<DayCounts>> split_by_performance(const std::vector<DayCounts>& days,
                                                                                double threshold) {
  std::pair<std::vector<DayCounts>, std::vector<DayCounts>> out;
  for (const auto& d : days) (d.satisfaction < threshold ? out.first : out.second).push_back(d);
  return out;
}

namespace {

struct Profile {
  std::vector<double> region, hour;
  double total = 0.0;
};

Profile mean_profile(const std::vector<DayCounts>& days) {
  Profile p;
  for (const auto& d : days) {
    p.hour.resize(std::max(p.hour.size(), d.counts.size()), 0.0);
    for (std::size_t t = 0; t < d.counts.size(); ++t) {
      p.region.resize(std::max(p.region.size(), d.counts[t].size()), 0.0);
      for (std::size_t i = 0; i < d.counts[t].size(); ++i) {
        p.region[i] += d.counts[t][i];
        p.hour[t] += d.counts[t][i];
        p.total += d.counts[t][i];
      }
    }
  }
  const double n = static_cast<double>(days.size());
  for (double& v : p.region) v /= n;
  for (double& v : p.hour) v /= n;
  p.total /= n;
  return p;
}

}  // namespace

DiffReport diff_report(const std::vector<DayCounts>& low, const std::vector<DayCounts>& other) {
  if (low.empty() || other.empty()) throw InputError("diff report needs days in both sets");
  const auto a = mean_profile(low), b = mean_profile(other);
  DiffReport r;
  r.low_days = low.size();
  r.other_days = other.size();
  r.per_region.assign(std::max(a.region.size(), b.region.size()), 0.0);
  for (std::size_t i = 0; i < r.per_region.size(); ++i) {
    r.per_region[i] = (i < a.region.size() ? a.region[i] : 0.0) - (i < b.region.size() ? b.region[i] : 0.0);
  }
  r.per_hour.assign(std::max(a.hour.size(), b.hour.size()), 0.0);
  for (std::size_t t = 0; t < r.per_hour.size(); ++t) {
    r.per_hour[t] = (t < a.hour.size() ? a.hour[t] : 0.0) - (t < b.hour.size() ? b.hour[t] : 0.0);
  }
  r.total_increase_pct = b.total > 0.0 ? 100.0 * (a.total - b.total) / b.total : 0.0;
  return r;
}

SweepRow summarize(std::string axis, double value, std::span<const double> samples) {
  if (samples.empty()) throw InputError("sweep needs at least one replication");
  SweepRow row;
  row.axis = std::move(axis);
  row.value = value;
  row.replications = static_cast<int>(samples.size());
  const double n = static_cast<double>(samples.size());
  row.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - row.mean) * (s - row.mean);
    row.std = std::sqrt(ss / (n - 1.0));
  }
  return row;
}

void sort_rows(std::vector<SweepRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.axis != b.axis ? a.axis < b.axis : a.value < b.value;
  });
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "axis,value,mean,std,replications\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%d\n", r.axis.c_str(), r.value, r.mean, r.std,
                  r.replications);
    out << buf;
  }
}

void write_sweep_json(std::ostream& out, const std::vector<SweepRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"axis", r.axis}, {"value", r.value}, {"mean", r.mean}, {"std", r.std},
                 {"replications", r.replications}});
  }
  out << j.dump(2) << "\n";
}

}  // namespace fleetlab
