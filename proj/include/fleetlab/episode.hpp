#pragma once

#include <iosfwd>
#include <vector>

#include "fleetlab/engine.hpp"
#include "fleetlab/scheduler.hpp"

namespace fleetlab {

struct IntervalRecord {
  int t = 0;
  std::vector<int> trad_counts;  // start of interval, before rebalancing
  std::vector<int> auto_counts;
  std::vector<std::size_t> actions;  // per ASMV; kStay when not acting
  StepOutcome outcome;
  std::vector<std::size_t> asmv_locations;  // after the step
  std::vector<double> asmv_batteries;       // after the step
  std::vector<double> trad_batteries;       // after the step, per vehicle
};

struct EpisodeTrace {
  std::vector<int> s0_trad;
  std::vector<int> s0_auto;
  std::vector<IntervalRecord> steps;
  std::int64_t demand = 0;
  std::int64_t served = 0;
  double d_rate = 1.0;
  int asmv_count = 0;
  double battery_capacity = 0.0;
  std::vector<bool> asmv_faulted;
};

/// Start-of-interval observations for every available ASMV, in id order.
std::vector<LowLevelObservation> low_level_observations(const Engine& engine, const FleetState& state,
                                                        const Forecaster& forecaster);
LowLevelObservation low_level_observation(const Engine& engine, const FleetState& state, const Forecaster& forecaster,
                                          const AsmVehicle& vehicle);

HighLevelObservation high_level_observation(std::vector<int> trad_deployment, const Forecaster& forecaster,
                                            int horizon);

struct EpisodeSetup {
  int horizon = 0;  // high-level forecast horizon h; 0 means the whole day
};

/// Deploys both fleets and runs all T steps. `state` comes from Engine::reset.
EpisodeTrace run_episode(const Engine& engine, FleetState state, const DemandTensor& demand,
                         TradScheduler& trad_sched, AsmvScheduler& asmv_sched, const Forecaster& forecaster,
                         EpisodeSetup setup = {});

/// Line-delimited JSON: an episode header line, then one line per interval.
/// Schema in README.md, "Trace format".
void write_trace(std::ostream& out, const EpisodeTrace& trace);
EpisodeTrace read_trace(std::istream& in);
/// All episodes of a file written by repeated write_trace calls.
std::vector<EpisodeTrace> read_traces(std::istream& in);

}  // namespace fleetlab
