#include "fleetlab/scenario.hpp"

namespace fleetlab {

namespace {

std::vector<std::vector<double>> gravity_rates(const std::vector<double>& origin, const std::vector<double>& dest,
                                               double scale) {
  std::vector<std::vector<double>> rates(origin.size(), std::vector<double>(dest.size()));
  for (std::size_t i = 0; i < origin.size(); ++i) {
    for (std::size_t j = 0; j < dest.size(); ++j) rates[i][j] = scale * origin[i] * dest[j];
  }
  return rates;
}

}  // namespace

Scenario desk_scenario() {
  Scenario s;
  s.name = "desk";
  // 3 x 2 grid, about 1.2 miles between neighbors.
  constexpr double lat0 = 41.87, lon0 = -87.65, dlat = 0.01738, dlon = 0.0233;
  std::vector<LatLon> centroids;
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 3; ++col) centroids.push_back({lat0 + row * dlat, lon0 + col * dlon});
  }
  s.map = build_region_map(centroids);
  s.world.intervals_per_day = 24;
  s.traditional = 20;
  s.asmvs = 2;
  s.base_rates = gravity_rates({2.0, 1.5, 1.0, 1.0, 0.7, 0.5}, {0.5, 0.7, 1.0, 1.0, 1.5, 2.0}, 0.04);
  s.hourly_profile = {0.2, 0.1, 0.1, 0.1, 0.2, 0.4, 0.8, 1.2, 1.3, 1.0, 1.0, 1.3,
                      1.4, 1.3, 1.2, 1.2, 1.4, 1.6, 1.5, 1.2, 0.9, 0.7, 0.5, 0.3};
  s.surge_probability = 0.5;
  s.surge_first = 11;
  s.surge_last = 20;
  s.surge_multiplier = 3.0;
  return s;
}

Scenario fixture_scenario() {
  Scenario s;
  s.name = "fixture3";
  s.map = build_region_map({{41.88, -87.63}, {41.89, -87.62}, {41.90, -87.64}});
  s.world.intervals_per_day = 4;
  s.traditional = 3;
  s.asmvs = 0;
  s.base_rates = gravity_rates({1.0, 0.6, 0.4}, {0.4, 0.6, 1.0}, 0.8);
  s.hourly_profile = {0.5, 1.0, 1.5, 1.0};
  s.surge_probability = 0.0;
  return s;
}

Scenario scenario_by_name(const std::string& name) {
  if (name == "desk") return desk_scenario();
  if (name == "fixture3") return fixture_scenario();
  throw InputError("unknown scenario preset: " + name);
}

DemandTensor scenario_day(const Scenario& scenario, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5C3));
  const int t_count = scenario.world.intervals_per_day;
  std::vector<std::size_t> all(scenario.map.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  std::vector<Surge> surges;
  for (int t = 0; t < t_count; ++t) {
    const double m = t < static_cast<int>(scenario.hourly_profile.size()) ? scenario.hourly_profile[t] : 1.0;
    surges.push_back({t, t, all, m});
  }
  if (scenario.surge_probability > 0.0 && uniform01(rng) < scenario.surge_probability) {
    const int hot = 1 + static_cast<int>(uniform_index(rng, 2));
    std::vector<std::size_t> regions = all;
    shuffle(std::span<std::size_t>(regions), rng);
    regions.resize(static_cast<std::size_t>(hot));
    surges.push_back({scenario.surge_first, scenario.surge_last, regions, scenario.surge_multiplier});
  }
  return generate_synthetic_demand(scenario.map, t_count, scenario.base_rates, surges, rng());
}

std::vector<DemandTensor> scenario_days(const Scenario& scenario, int days, std::uint64_t seed) {
  std::vector<DemandTensor> out;
  for (int d = 0; d < days; ++d) out.push_back(scenario_day(scenario, derive_seed(seed, static_cast<std::uint64_t>(d))));
  return out;
}

}  // namespace fleetlab
