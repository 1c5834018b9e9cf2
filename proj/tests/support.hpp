#pragma once

// Shared fixtures for the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fleetlab/engine.hpp"
#include "fleetlab/ingest.hpp"
#include "fleetlab/random.hpp"
#include "fleetlab/world.hpp"

namespace fleetlab::testing {

/// Random centroids inside a ~6 x 6 mile box.
inline RegionMap random_map(Rng& rng, std::size_t n) {
  std::vector<LatLon> c;
  for (std::size_t i = 0; i < n; ++i) c.push_back({41.85 + uniform(rng, 0.0, 0.09), -87.70 + uniform(rng, 0.0, 0.11)});
  return build_region_map(c);
}

/// Random day with small per-cell rates.
inline DemandTensor random_day(Rng& rng, const RegionMap& map, int intervals, double rate) {
  std::vector<std::vector<double>> rates(map.size(), std::vector<double>(map.size()));
  for (auto& row : rates) {
    for (double& r : row) r = uniform(rng, 0.0, rate);
  }
  return generate_synthetic_demand(map, intervals, rates, {}, rng());
}

/// Random admissible action per ASMV.
inline std::vector<std::size_t> random_actions(const Engine& engine, const FleetState& s, Rng& rng) {
  std::vector<std::size_t> a(s.asmvs.size(), kStay);
  for (std::size_t k = 0; k < s.asmvs.size(); ++k) {
    const auto& v = s.asmvs[k];
    if (v.faulted || !v.available) continue;
    const auto ok = engine.feasible_targets(v);
    std::vector<std::size_t> options;
    for (std::size_t r = 0; r < ok.size(); ++r) {
      if (ok[r]) options.push_back(r);
    }
    a[k] = options[uniform_index(rng, options.size())];
  }
  return a;
}

inline bool same_outcome(const StepOutcome& a, const StepOutcome& b) {
  if (a.satisfied != b.satisfied || a.unsatisfied != b.unsatisfied || a.demand != b.demand ||
      a.served != b.served || a.reward != b.reward || a.trips_served.size() != b.trips_served.size()) {
    return false;
  }
  for (std::size_t k = 0; k < a.trips_served.size(); ++k) {
    const auto& x = a.trips_served[k];
    const auto& y = b.trips_served[k];
    if (x.origin != y.origin || x.dest != y.dest || x.distance_m != y.distance_m || x.served_by != y.served_by ||
        x.asmv_id != y.asmv_id) {
      return false;
    }
  }
  return true;
}

inline bool same_fleet(const FleetState& a, const FleetState& b) {
  if (a.interval != b.interval || a.trad.size() != b.trad.size() || a.asmvs.size() != b.asmvs.size()) return false;
  for (std::size_t k = 0; k < a.trad.size(); ++k) {
    if (a.trad[k].location != b.trad[k].location || a.trad[k].battery != b.trad[k].battery) return false;
  }
  for (std::size_t k = 0; k < a.asmvs.size(); ++k) {
    const auto& x = a.asmvs[k];
    const auto& y = b.asmvs[k];
    if (x.location != y.location || x.battery != y.battery || x.available != y.available || x.faulted != y.faulted) {
      return false;
    }
  }
  return true;
}

/// Invariant violations seen while stepping random days.
struct InvariantReport {
  std::int64_t steps = 0;
  std::int64_t violations = 0;
  std::string first;

  void fail(const std::string& what) {
    if (violations++ == 0) first = what;
  }
};

/// Steps random worlds until `steps` intervals have run, checking vehicle
/// conservation, battery monotonicity, D_t <= U_t, census consistency and
/// replay determinism.
inline InvariantReport check_engine_invariants(std::uint64_t seed, std::int64_t steps) {
  InvariantReport report;
  Rng rng(seed);
  while (report.steps < steps) {
    const std::size_t n = 2 + uniform_index(rng, 5);
    const RegionMap map = random_map(rng, n);
    WorldConfig config;
    config.intervals_per_day = 4 + static_cast<int>(uniform_index(rng, 9));
    EngineOptions options;
    options.service_neighbors = uniform_index(rng, 3) == 0 ? 1 : 0;
    const Engine engine(map, config, options);
    const DemandTensor day = random_day(rng, map, config.intervals_per_day, 1.5);

    std::vector<int> pre(n), s0(n);
    int fleet = static_cast<int>(uniform_index(rng, 12));
    for (int k = 0; k < fleet; ++k) ++pre[uniform_index(rng, n)];
    for (int k = 0; k < fleet; ++k) ++s0[uniform_index(rng, n)];
    const int asmvs = static_cast<int>(uniform_index(rng, 6));
    const double faults[] = {0.0, 0.1, 0.25, 0.5};
    const double fault = faults[uniform_index(rng, 4)];
    const std::uint64_t day_seed = rng();

    FleetState s = engine.reset(pre, day, asmvs, fault, day_seed);
    s = engine.deploy_traditional(std::move(s), s0);
    std::vector<int> alloc(n, 0);
    for (int k = 0; k < s.active_asmv_count(); ++k) ++alloc[uniform_index(rng, n)];
    s = engine.deploy_asmv(std::move(s), alloc);
    if (engine.aggregate(s) != alloc) report.fail("deployment census differs from allocation");

    FleetState replay = s;
    Rng action_rng(rng());
    Rng replay_rng = action_rng;
    const int active = s.active_asmv_count();

    while (s.interval < s.intervals) {
      const auto actions = random_actions(engine, s, action_rng);
      const FleetState before = s;
      auto [next, out] = engine.step(s, day, actions);
      const int t = before.interval;
      ++report.steps;

      if (next.trad.size() != before.trad.size()) report.fail("traditional fleet size changed");
      if (next.asmvs.size() != before.asmvs.size() || next.active_asmv_count() != active) {
        report.fail("ASMV fleet size changed");
      }
      int census = 0;
      for (int c : next.trad_counts()) census += c;
      if (census != fleet) report.fail("traditional census changed");
      for (std::size_t k = 0; k < next.trad.size(); ++k) {
        if (next.trad[k].battery > before.trad[k].battery || next.trad[k].battery < 0.0) {
          report.fail("traditional battery increased");
        }
      }
      for (std::size_t k = 0; k < next.asmvs.size(); ++k) {
        const auto& v = next.asmvs[k];
        if (v.battery > before.asmvs[k].battery || v.battery < 0.0 || v.battery > config.battery_capacity) {
          report.fail("ASMV battery increased");
        }
        const bool should = !v.faulted && v.battery >= config.battery_threshold && v.location != kUnplaced;
        if (v.available && !should) report.fail("ASMV available below threshold");
      }
      if (out.served < 0 || out.served > out.demand) report.fail("D_t outside [0, U_t]");
      if (out.demand != day.interval_total(t)) report.fail("U_t differs from demand");
      for (std::size_t i = 0; i < n; ++i) {
        if (out.satisfied[i] + out.unsatisfied[i] != day.origin_total(t, i)) report.fail("per-region demand split");
      }
      std::vector<int> expect(n, 0);
      for (const auto& v : next.asmvs) {
        if (!v.faulted && v.location != kUnplaced) ++expect[v.location];
      }
      if (engine.aggregate(next) != expect) report.fail("aggregation inconsistent with census");
      int placed = 0;
      for (int c : expect) placed += c;
      if (placed != active) report.fail("operational ASMV lost");
      if (next.interval == next.intervals) {
        const double want = satisfaction_ratio(next.served_so_far, next.demand_so_far);
        if (out.reward != want) report.fail("terminal reward");
      } else if (out.reward != 0.0) {
        report.fail("non-terminal reward");
      }

      const auto replay_actions = random_actions(engine, replay, replay_rng);
      auto [replay_next, replay_out] = engine.step(replay, day, replay_actions);
      if (replay_actions != actions || !same_outcome(out, replay_out) || !same_fleet(next, replay_next)) {
        report.fail("replay diverged");
      }
      replay = std::move(replay_next);
      s = std::move(next);
    }
  }
  return report;
}

/// sup |F_a - F_b| evaluated at every observed point, with ECDFs counted
/// directly.
inline double ks_statistic_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  const auto ecdf = [](const std::vector<double>& s, double x) {
    std::size_t c = 0;
    for (double v : s) c += v <= x ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(s.size());
  };
  for (const auto* s : {&a, &b}) {
    for (double x : *s) d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
  }
  return d;
}

/// Kolmogorov survival 2 * sum_k (-1)^(k-1) exp(-2 k^2 lambda^2) in long
/// double, summed until the terms vanish.
inline double kolmogorov_oracle(double lambda) {
  if (lambda <= 0.0) return 1.0;
  long double sum = 0.0L;
  const long double l2 = static_cast<long double>(lambda) * lambda;
  for (long k = 1; k < 1000000; ++k) {
    const long double term = std::exp(-2.0L * k * k * l2);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-30L) break;
  }
  const long double p = 2.0L * sum;
  return static_cast<double>(p < 0.0L ? 0.0L : (p > 1.0L ? 1.0L : p));
}

}  // namespace fleetlab::testing
