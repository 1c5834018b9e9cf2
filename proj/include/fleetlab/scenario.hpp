#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fleetlab/engine.hpp"
#include "fleetlab/ingest.hpp"

namespace fleetlab {

/// A small synthetic city with day-to-day surges.
///
/// Every day draws Poisson demand from a fixed hourly profile; with
/// probability `surge_probability` one or two regions surge between
/// `surge_first` and `surge_last` (inclusive) by `surge_multiplier`.
struct Scenario {
  std::string name;
  RegionMap map;
  WorldConfig world;
  EngineOptions engine;
  int traditional = 0;
  int asmvs = 0;
  std::vector<std::vector<double>> base_rates;  // per interval-of-peak unit, [i][j]
  std::vector<double> hourly_profile;           // multiplier per interval
  double surge_probability = 0.0;
  int surge_first = 0, surge_last = 0;
  double surge_multiplier = 1.0;
};

/// Six regions, 24 intervals, 20 traditional vehicles and 2 ASMVs.
Scenario desk_scenario();
/// Three regions, 4 intervals, a handful of vehicles; used for golden files.
Scenario fixture_scenario();
/// Looks a preset up by name ("desk" or "fixture3").
Scenario scenario_by_name(const std::string& name);

DemandTensor scenario_day(const Scenario& scenario, std::uint64_t seed);
std::vector<DemandTensor> scenario_days(const Scenario& scenario, int days, std::uint64_t seed);

}  // namespace fleetlab
