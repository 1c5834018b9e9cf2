#include "fleetlab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fleetlab {

std::vector<int> FleetState::trad_counts() const {
  std::vector<int> counts(regions, 0);
  for (const auto& v : trad) ++counts[v.location];
  return counts;
}

std::vector<std::vector<double>> FleetState::trad_batteries() const {
  std::vector<std::vector<double>> out(regions);
  for (const auto& v : trad) out[v.location].push_back(v.battery);
  for (auto& b : out) std::sort(b.begin(), b.end(), std::greater<>());
  return out;
}

int FleetState::active_asmv_count() const {
  return static_cast<int>(std::count_if(asmvs.begin(), asmvs.end(), [](const AsmVehicle& v) { return !v.faulted; }));
}

double satisfaction_ratio(std::int64_t served, std::int64_t demand) {
  return demand == 0 ? 1.0 : static_cast<double>(served) / static_cast<double>(demand);
}

std::vector<bool> feasible_targets(const RegionMap& map, const WorldConfig& config, const EngineOptions& options,
                                   std::size_t location, double battery) {
  std::vector<bool> ok(map.size(), false);
  for (std::size_t r = 0; r < map.size(); ++r) {
    const double d = map.distance(location, r);
    ok[r] = r == location || (d <= options.move_range_miles && d <= battery - config.battery_threshold);
  }
  return ok;
}

Engine::Engine(const RegionMap& map, WorldConfig config, EngineOptions options)
    : map_(&map), config_(config), options_(options) {
  config_.validate();
  if (!(options_.move_range_miles >= 0.0)) throw InputError("move range must be nonnegative");
}

std::vector<bool> Engine::feasible_targets(const AsmVehicle& vehicle) const {
  return fleetlab::feasible_targets(*map_, config_, options_, vehicle.location, vehicle.battery);
}

FleetState Engine::reset(std::span<const int> s_pre_trad, const DemandTensor& demand, int asmv_count,
                         double fault_rate, std::uint64_t seed) const {
  const std::size_t n = map_->size();
  if (s_pre_trad.size() != n) throw InputError("traditional distribution must have one count per region");
  if (demand.regions() != n || demand.intervals() != config_.intervals_per_day) {
    throw InputError("demand tensor shape does not match the world");
  }
  if (asmv_count < 0) throw InputError("ASMV count must be nonnegative");
  if (!(fault_rate >= 0.0 && fault_rate <= 0.5)) throw InputError("fault rate must lie in [0, 0.5]");

  FleetState s;
  s.regions = n;
  s.intervals = config_.intervals_per_day;
  s.rng.seed(seed);
  for (std::size_t r = 0; r < n; ++r) {
    if (s_pre_trad[r] < 0) throw InputError("vehicle counts must be nonnegative");
    for (int k = 0; k < s_pre_trad[r]; ++k) s.trad.push_back({r, config_.battery_capacity});
  }
  s.asmvs.resize(static_cast<std::size_t>(asmv_count));
  for (int k = 0; k < asmv_count; ++k) {
    s.asmvs[static_cast<std::size_t>(k)] = AsmVehicle{k, kUnplaced, config_.battery_capacity, false, false};
  }
  const auto faulted = static_cast<std::size_t>(std::floor(fault_rate * asmv_count + 1e-9));
  if (faulted > 0) {
    std::vector<std::size_t> ids(s.asmvs.size());
    std::iota(ids.begin(), ids.end(), 0);
    Rng fault_rng(derive_seed(seed, 0xFA017));
    shuffle(std::span(ids), fault_rng);
    for (std::size_t k = 0; k < faulted; ++k) s.asmvs[ids[k]].faulted = true;
  }
  return s;
}

FleetState Engine::deploy_traditional(FleetState state, std::span<const int> s0_trad) const {
  if (s0_trad.size() != state.regions) throw InputError("traditional deployment must have one count per region");
  long long total = 0;
  for (int c : s0_trad) {
    if (c < 0) throw InputError("vehicle counts must be nonnegative");
    total += c;
  }
  if (total != static_cast<long long>(state.trad.size())) {
    throw InputError("traditional deployment moves " + std::to_string(total) + " vehicles but the fleet has " +
                     std::to_string(state.trad.size()));
  }
  std::size_t k = 0;
  for (std::size_t r = 0; r < s0_trad.size(); ++r) {
    for (int c = 0; c < s0_trad[r]; ++c) state.trad[k++] = TradVehicle{r, config_.battery_capacity};
  }
  return state;
}

FleetState Engine::deploy_asmv(FleetState state, std::span<const int> allocation) const {
  if (allocation.size() != state.regions) throw InputError("ASMV allocation must have one count per region");
  long long total = 0;
  for (int c : allocation) {
    if (c < 0) throw InputError("vehicle counts must be nonnegative");
    total += c;
  }
  if (total != state.active_asmv_count()) {
    throw InputError("ASMV allocation places " + std::to_string(total) + " vehicles but " +
                     std::to_string(state.active_asmv_count()) + " are operational");
  }
  std::size_t region = 0;
  int left = allocation.empty() ? 0 : allocation[0];
  for (auto& v : state.asmvs) {
    v.battery = config_.battery_capacity;
    if (v.faulted) {
      v.location = kUnplaced;
      v.available = false;
      continue;
    }
    while (left == 0) left = allocation[++region];
    v.location = region;
    v.available = true;
    --left;
  }
  return state;
}

std::vector<int> Engine::aggregate(const FleetState& state) const {
  std::vector<int> counts(state.regions, 0);
  for (const auto& v : state.asmvs) {
    if (!v.faulted && v.location != kUnplaced) ++counts[v.location];
  }
  return counts;
}

StepResult Engine::step(FleetState state, const DemandTensor& demand, std::span<const std::size_t> targets) const {
  const std::size_t n = state.regions;
  const int t = state.interval;
  if (t >= state.intervals) throw InputError("episode already finished");
  if (demand.regions() != n || demand.intervals() != state.intervals) throw InputError("demand tensor shape mismatch");
  if (targets.size() != state.asmvs.size()) throw ActionError("expected one action per ASMV");
  const double mpm = config_.meters_per_mile;

  // Phase 1: self-rebalancing.
  for (std::size_t k = 0; k < state.asmvs.size(); ++k) {
    auto& v = state.asmvs[k];
    const std::size_t target = targets[k];
    if (target == kStay || target == v.location) continue;
    if (v.faulted || !v.available) throw ActionError("action for unavailable ASMV " + std::to_string(k));
    if (target >= n) throw ActionError("target region out of range");
    const double d = map_->distance(v.location, target);
    if (d > options_.move_range_miles || d > v.battery) {
      throw ActionError("ASMV " + std::to_string(k) + " cannot reach region " + std::to_string(target));
    }
    v.location = target;
    v.battery -= d;
    if (v.battery < config_.battery_threshold) v.available = false;
  }

  // Phase 2: trip service.
  StepOutcome out;
  out.satisfied.assign(n, 0);
  out.unsatisfied.assign(n, 0);
  std::vector<bool> trad_busy(state.trad.size(), false);
  std::vector<bool> asmv_busy(state.asmvs.size(), false);

  std::vector<std::vector<std::size_t>> trad_at(n), asmv_at(n);
  for (std::size_t k = 0; k < state.trad.size(); ++k) trad_at[state.trad[k].location].push_back(k);
  for (std::size_t k = 0; k < state.asmvs.size(); ++k) {
    const auto& v = state.asmvs[k];
    if (v.available && !v.faulted) asmv_at[v.location].push_back(k);
  }

  struct Request {
    std::size_t dest;
    TripAttr attr;
  };
  std::vector<Request> requests;
  for (std::size_t i = 0; i < n; ++i) {
    requests.clear();
    for (std::size_t j = 0; j < n; ++j) {
      for (const auto& a : demand.cell(t, i, j)) requests.push_back({j, a});
    }
    shuffle(std::span(requests), state.rng);

    std::vector<std::size_t> sources{i};
    if (options_.service_neighbors > 0) {
      const auto near = neighbors(*map_, i, options_.service_neighbors);
      sources.insert(sources.end(), near.begin(), near.end());
    }

    for (const auto& req : requests) {
      const double miles = req.attr.distance_m / mpm;
      bool served = false;
      for (std::size_t src : sources) {
        // Traditional first.
        std::size_t best = SIZE_MAX;
        for (std::size_t k : trad_at[src]) {
          if (trad_busy[k] || state.trad[k].battery < miles) continue;
          if (best == SIZE_MAX || state.trad[k].battery > state.trad[best].battery) best = k;
        }
        if (best != SIZE_MAX) {
          trad_busy[best] = true;
          state.trad[best].location = req.dest;
          state.trad[best].battery = std::max(0.0, state.trad[best].battery - miles);
          out.trips_served.push_back({i, req.dest, req.attr.distance_m, req.attr.duration_s, ServedBy::Traditional, -1});
          served = true;
          break;
        }
        for (std::size_t k : asmv_at[src]) {
          const auto& v = state.asmvs[k];
          if (asmv_busy[k] || v.battery < miles) continue;
          if (best == SIZE_MAX || v.battery > state.asmvs[best].battery) best = k;
        }
        if (best != SIZE_MAX) {
          auto& v = state.asmvs[best];
          asmv_busy[best] = true;
          v.location = req.dest;
          v.battery = std::max(0.0, v.battery - miles);
          if (v.battery < config_.battery_threshold) v.available = false;
          out.trips_served.push_back(
              {i, req.dest, req.attr.distance_m, req.attr.duration_s, ServedBy::Asmv, v.id});
          served = true;
          break;
        }
      }
      ++(served ? out.satisfied[i] : out.unsatisfied[i]);
    }
  }

  // Phase 3: bookkeeping.
  out.demand = demand.interval_total(t);
  out.served = static_cast<std::int64_t>(out.trips_served.size());
  state.demand_so_far += out.demand;
  state.served_so_far += out.served;
  ++state.interval;
  if (state.interval == state.intervals) out.reward = satisfaction_ratio(state.served_so_far, state.demand_so_far);
  return {std::move(state), std::move(out)};
}

}  // namespace fleetlab
