#include "fleetlab/episode.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

namespace fleetlab {

using nlohmann::json;

std::vector<int> largest_remainder(const std::vector<double>& weights, int total) {
  const std::size_t n = weights.size();
  std::vector<int> out(n, 0);
  if (n == 0 || total <= 0) return out;
  double sum = 0.0;
  for (double w : weights) sum += w > 0.0 ? w : 0.0;
  std::vector<double> share(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i] > 0.0 ? weights[i] : 0.0;
    share[i] = sum > 0.0 ? total * (w / sum) : static_cast<double>(total) / static_cast<double>(n);
  }
  int assigned = 0;
  std::vector<double> rem(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<int>(std::floor(share[i]));
    rem[i] = share[i] - out[i];
    assigned += out[i];
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Remainders equal to 1e-9 are ties; rounding in the shares must not
  // override the lower-index rule.
  const auto key = [&](std::size_t i) { return std::llround(rem[i] * 1e9); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % n) {
    ++out[order[k]];
    ++assigned;
  }
  return out;
}

LowLevelObservation low_level_observation(const Engine& engine, const FleetState& state, const Forecaster& forecaster,
                                          const AsmVehicle& vehicle) {
  LowLevelObservation obs;
  obs.vehicle_id = vehicle.id;
  obs.own_location = vehicle.location;
  obs.own_battery = vehicle.battery;
  obs.battery_capacity = engine.config().battery_capacity;
  obs.interval = state.interval;
  obs.intervals = state.intervals;
  obs.trad_counts = state.trad_counts();
  obs.auto_counts = engine.aggregate(state);
  obs.predicted_next = forecaster.predict(state.interval, 1);
  if (vehicle.available && !vehicle.faulted) {
    obs.feasible = engine.feasible_targets(vehicle);
  } else {
    obs.feasible.assign(state.regions, false);
    if (vehicle.location < state.regions) obs.feasible[vehicle.location] = true;
  }
  return obs;
}

std::vector<LowLevelObservation> low_level_observations(const Engine& engine, const FleetState& state,
                                                        const Forecaster& forecaster) {
  std::vector<LowLevelObservation> out;
  for (const auto& v : state.asmvs) {
    if (v.available && !v.faulted) out.push_back(low_level_observation(engine, state, forecaster, v));
  }
  return out;
}

HighLevelObservation high_level_observation(std::vector<int> trad_deployment, const Forecaster& forecaster,
                                            int horizon) {
  if (horizon <= 0) horizon = forecaster.intervals();
  return {std::move(trad_deployment), forecaster.predict(0, horizon)};
}

EpisodeTrace run_episode(const Engine& engine, FleetState state, const DemandTensor& demand,
                         TradScheduler& trad_sched, AsmvScheduler& asmv_sched, const Forecaster& forecaster,
                         EpisodeSetup setup) {
  EpisodeTrace trace;
  trace.asmv_count = static_cast<int>(state.asmvs.size());
  trace.battery_capacity = engine.config().battery_capacity;
  for (const auto& v : state.asmvs) trace.asmv_faulted.push_back(v.faulted);

  TradScheduleRequest req{state.trad_counts(), forecaster.predict(0, forecaster.intervals()),
                          static_cast<int>(state.trad.size())};
  trace.s0_trad = trad_sched.allocate(req);
  state = engine.deploy_traditional(std::move(state), trace.s0_trad);

  const int active = state.active_asmv_count();
  if (active > 0) {
    trace.s0_auto = asmv_sched.deploy(high_level_observation(trace.s0_trad, forecaster, setup.horizon), active);
  } else {
    trace.s0_auto.assign(state.regions, 0);
  }
  state = engine.deploy_asmv(std::move(state), trace.s0_auto);

  while (state.interval < state.intervals) {
    IntervalRecord rec;
    rec.t = state.interval;
    rec.trad_counts = state.trad_counts();
    rec.auto_counts = engine.aggregate(state);
    rec.actions.assign(state.asmvs.size(), kStay);

    const auto obs = low_level_observations(engine, state, forecaster);
    if (!obs.empty()) {
      const auto targets = asmv_sched.rebalance(obs);
      if (targets.size() != obs.size()) throw ActionError("scheduler returned the wrong number of actions");
      for (std::size_t k = 0; k < obs.size(); ++k) {
        rec.actions[static_cast<std::size_t>(obs[k].vehicle_id)] = targets[k];
      }
    }
    auto result = engine.step(std::move(state), demand, rec.actions);
    state = std::move(result.state);
    rec.outcome = std::move(result.outcome);
    for (const auto& v : state.asmvs) {
      rec.asmv_locations.push_back(v.location);
      rec.asmv_batteries.push_back(v.battery);
    }
    for (const auto& v : state.trad) rec.trad_batteries.push_back(v.battery);
    trace.steps.push_back(std::move(rec));
  }
  trace.demand = state.demand_so_far;
  trace.served = state.served_so_far;
  trace.d_rate = satisfaction_ratio(trace.served, trace.demand);
  return trace;
}

namespace {

json location_json(std::size_t loc) { return loc == kUnplaced ? json(nullptr) : json(loc); }
std::size_t location_from(const json& j) { return j.is_null() ? kUnplaced : j.get<std::size_t>(); }

}  // namespace

void write_trace(std::ostream& out, const EpisodeTrace& trace) {
  json head = {{"type", "episode"},
               {"s0_trad", trace.s0_trad},
               {"s0_auto", trace.s0_auto},
               {"demand", trace.demand},
               {"served", trace.served},
               {"d_rate", trace.d_rate},
               {"asmv_count", trace.asmv_count},
               {"battery_capacity", trace.battery_capacity},
               {"asmv_faulted", trace.asmv_faulted}};
  out << head.dump() << "\n";
  for (const auto& rec : trace.steps) {
    json actions = json::array();
    for (auto a : rec.actions) actions.push_back(location_json(a));
    json locations = json::array();
    for (auto l : rec.asmv_locations) locations.push_back(location_json(l));
    json trips = json::array();
    for (const auto& s : rec.outcome.trips_served) {
      trips.push_back({s.origin, s.dest, s.distance_m, s.duration_s,
                       s.served_by == ServedBy::Asmv ? "asmv" : "trad", s.asmv_id});
    }
    json line = {{"type", "interval"},
                 {"t", rec.t},
                 {"trad_counts", rec.trad_counts},
                 {"auto_counts", rec.auto_counts},
                 {"actions", actions},
                 {"satisfied", rec.outcome.satisfied},
                 {"unsatisfied", rec.outcome.unsatisfied},
                 {"demand", rec.outcome.demand},
                 {"served", rec.outcome.served},
                 {"reward", rec.outcome.reward},
                 {"trips", trips},
                 {"asmv_locations", locations},
                 {"asmv_batteries", rec.asmv_batteries},
                 {"trad_batteries", rec.trad_batteries}};
    out << line.dump() << "\n";
  }
}

std::vector<EpisodeTrace> read_traces(std::istream& in) {
  std::vector<EpisodeTrace> traces;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "episode") {
      auto& trace = traces.emplace_back();
      trace.s0_trad = j.at("s0_trad").get<std::vector<int>>();
      trace.s0_auto = j.at("s0_auto").get<std::vector<int>>();
      trace.demand = j.at("demand").get<std::int64_t>();
      trace.served = j.at("served").get<std::int64_t>();
      trace.d_rate = j.at("d_rate").get<double>();
      trace.asmv_count = j.at("asmv_count").get<int>();
      trace.battery_capacity = j.at("battery_capacity").get<double>();
      trace.asmv_faulted = j.at("asmv_faulted").get<std::vector<bool>>();
      continue;
    }
    if (traces.empty()) throw InputError("trace must start with an episode header");
    auto& trace = traces.back();
    IntervalRecord rec;
    rec.t = j.at("t").get<int>();
    rec.trad_counts = j.at("trad_counts").get<std::vector<int>>();
    rec.auto_counts = j.at("auto_counts").get<std::vector<int>>();
    for (const auto& a : j.at("actions")) rec.actions.push_back(location_from(a));
    rec.outcome.satisfied = j.at("satisfied").get<std::vector<int>>();
    rec.outcome.unsatisfied = j.at("unsatisfied").get<std::vector<int>>();
    rec.outcome.demand = j.at("demand").get<std::int64_t>();
    rec.outcome.served = j.at("served").get<std::int64_t>();
    rec.outcome.reward = j.at("reward").get<double>();
    for (const auto& s : j.at("trips")) {
      rec.outcome.trips_served.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(), s.at(2).get<double>(),
                                          s.at(3).get<double>(),
                                          s.at(4).get<std::string>() == "asmv" ? ServedBy::Asmv : ServedBy::Traditional,
                                          s.at(5).get<int>()});
    }
    for (const auto& l : j.at("asmv_locations")) rec.asmv_locations.push_back(location_from(l));
    rec.asmv_batteries = j.at("asmv_batteries").get<std::vector<double>>();
    rec.trad_batteries = j.at("trad_batteries").get<std::vector<double>>();
    trace.steps.push_back(std::move(rec));
  }
  return traces;
}

EpisodeTrace read_trace(std::istream& in) {
  auto traces = read_traces(in);
  if (traces.empty()) throw InputError("empty trace");
  return std::move(traces.front());
}

}  // namespace fleetlab
