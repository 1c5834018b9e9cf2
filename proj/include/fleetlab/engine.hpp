#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fleetlab/ingest.hpp"
#include "fleetlab/random.hpp"
#include "fleetlab/world.hpp"

namespace fleetlab {

inline constexpr std::size_t kUnplaced = std::numeric_limits<std::size_t>::max();
/// Low-level action meaning "do not move".
inline constexpr std::size_t kStay = std::numeric_limits<std::size_t>::max();

struct EngineOptions {
  /// ASMVs may relocate at most this far per interval.
  double move_range_miles = 5.0;
  /// 0 = strict same-region service; k > 0 also lets the k nearest regions
  /// serve a request.
  std::size_t service_neighbors = 0;
};

struct AsmVehicle {
  int id = 0;
  std::size_t location = kUnplaced;
  double battery = 0.0;
  bool available = false;
  bool faulted = false;
};

struct TradVehicle {
  std::size_t location = 0;
  double battery = 0.0;
};

/// Joint fleet state at the start of `interval`.
struct FleetState {
  int interval = 0;
  int intervals = 0;
  std::vector<TradVehicle> trad;
  std::vector<AsmVehicle> asmvs;
  std::int64_t demand_so_far = 0;
  std::int64_t served_so_far = 0;
  Rng rng;

  std::size_t regions = 0;

  std::vector<int> trad_counts() const;
  /// Batteries of the traditional vehicles in each region, descending.
  std::vector<std::vector<double>> trad_batteries() const;
  int active_asmv_count() const;  // non-faulted
};

enum class ServedBy { Traditional, Asmv };

struct ServedTrip {
  std::size_t origin = 0;
  std::size_t dest = 0;
  double distance_m = 0.0;
  double duration_s = 0.0;
  ServedBy served_by = ServedBy::Traditional;
  int asmv_id = -1;
};

struct StepOutcome {
  std::vector<int> satisfied;    // per origin region
  std::vector<int> unsatisfied;  // per origin region
  std::vector<ServedTrip> trips_served;
  std::int64_t demand = 0;  // U_t
  std::int64_t served = 0;  // D_t
  double reward = 0.0;
};

struct StepResult {
  FleetState state;
  StepOutcome outcome;
};

/// Which targets a vehicle may choose while staying available: its own
/// region, plus regions within the move range whose distance does not push
/// the battery below the threshold.
std::vector<bool> feasible_targets(const RegionMap& map, const WorldConfig& config, const EngineOptions& options,
                                   std::size_t location, double battery);

/// Thrown when a scheduler hands the engine an inadmissible action.
class ActionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete-time simulator of one operating day.
///
/// Each step runs three phases: ASMV rebalancing (battery pays the centroid
/// distance), trip service (per origin region, trips in seeded-shuffled
/// order; traditional vehicles first, then ASMVs; the highest-battery
/// feasible vehicle wins, ties to the lower id; a vehicle serves at most one
/// trip per interval), and bookkeeping of D_t plus the terminal reward.
class Engine {
 public:
  Engine(const RegionMap& map, WorldConfig config, EngineOptions options = {});

  const RegionMap& map() const { return *map_; }
  const WorldConfig& config() const { return config_; }
  const EngineOptions& options() const { return options_; }

  /// Fresh day: traditional vehicles placed per `s_pre_trad` at full charge;
  /// `asmv_count` unplaced ASMVs of which floor(fault_rate * K) are faulted.
  FleetState reset(std::span<const int> s_pre_trad, const DemandTensor& demand, int asmv_count, double fault_rate,
                   std::uint64_t seed) const;

  /// Truck redistribution of the traditional fleet; recharges every vehicle.
  FleetState deploy_traditional(FleetState state, std::span<const int> s0_trad) const;

  /// Places the non-faulted ASMVs: ids in order fill regions from the lowest index.
  FleetState deploy_asmv(FleetState state, std::span<const int> allocation) const;

  /// `targets[k]` is the destination of ASMV k, or kStay. Vehicles that are
  /// faulted or unavailable must stay.
  StepResult step(FleetState state, const DemandTensor& demand, std::span<const std::size_t> targets) const;

  /// Per-region census of non-faulted placed ASMVs.
  std::vector<int> aggregate(const FleetState& state) const;

  std::vector<bool> feasible_targets(const AsmVehicle& vehicle) const;

 private:
  const RegionMap* map_;
  WorldConfig config_;
  EngineOptions options_;
};

/// D_rate with the vacuous-satisfaction convention (0/0 = 1).
double satisfaction_ratio(std::int64_t served, std::int64_t demand);

}  // namespace fleetlab
