#pragma once

#include <string>
#include <vector>

#include "fleetlab/forecast.hpp"

namespace fleetlab {

/// Inputs of the once-per-day traditional redistribution.
struct TradScheduleRequest {
  std::vector<int> s_pre_trad;
  RealTensor predicted_demand;  // whole day
  int fleet_total = 0;
};

class TradScheduler {
 public:
  virtual ~TradScheduler() = default;
  virtual std::string name() const = 0;
  /// Per-region counts summing to `request.fleet_total`.
  virtual std::vector<int> allocate(const TradScheduleRequest& request) = 0;
};

/// What the deployment agent sees before the day starts.
struct HighLevelObservation {
  std::vector<int> trad_deployment;
  RealTensor predicted_horizon;  // h x N x N
};

/// What one ASMV sees at the start of an interval.
struct LowLevelObservation {
  int vehicle_id = 0;
  std::size_t own_location = 0;
  double own_battery = 0.0;
  double battery_capacity = 1.0;
  int interval = 0;
  int intervals = 1;
  std::vector<int> trad_counts;
  std::vector<int> auto_counts;
  RealTensor predicted_next;  // 1 x N x N
  std::vector<bool> feasible;  // admissible targets
};

class AsmvScheduler {
 public:
  virtual ~AsmvScheduler() = default;
  virtual std::string name() const = 0;
  /// Initial placement of `vehicles` operational ASMVs.
  virtual std::vector<int> deploy(const HighLevelObservation& obs, int vehicles) = 0;
  /// One target region per observation (available vehicles, id order).
  virtual std::vector<std::size_t> rebalance(const std::vector<LowLevelObservation>& obs) = 0;
};

/// Largest-remainder rounding of `weights` scaled to `total`; remainder ties
/// go to the lower index. All-zero weights are treated as uniform.
std::vector<int> largest_remainder(const std::vector<double>& weights, int total);

}  // namespace fleetlab
