#include "fleetlab/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fleetlab {

double haversine_miles(const LatLon& a, const LatLon& b) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * kDeg;
  const double dlon = (b.lon - a.lon) * kDeg;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(a.lat * kDeg) * std::cos(b.lat * kDeg) * s2 * s2;
  return 2.0 * kEarthRadiusMiles * std::asin(std::min(1.0, std::sqrt(h)));
}

const std::vector<std::size_t>& RegionMap::neighbor_order(std::size_t region) const {
  if (region >= size()) throw InputError("region index out of range: " + std::to_string(region));
  return neighbors_[region];
}

std::size_t RegionMap::index_of(std::int64_t external_id) const {
  const auto it = std::find(external_ids_.begin(), external_ids_.end(), external_id);
  if (it == external_ids_.end()) throw InputError("unknown region id " + std::to_string(external_id));
  return static_cast<std::size_t>(it - external_ids_.begin());
}

std::size_t RegionMap::nearest(const LatLon& p) const {
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t i = 0; i < size(); ++i) {
    const double d = haversine_miles(p, centroids_[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

RegionMap build_region_map(const std::vector<LatLon>& centroids, std::size_t neighbor_k,
                           std::vector<std::int64_t> external_ids) {
  if (centroids.empty()) throw InputError("region map needs at least one centroid");
  for (const auto& c : centroids) {
    if (!(c.lat >= -90.0 && c.lat <= 90.0) || !(c.lon >= -180.0 && c.lon <= 180.0)) {
      throw InputError("invalid centroid coordinates");
    }
  }
  const std::size_t n = centroids.size();
  if (external_ids.empty()) {
    external_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) external_ids[i] = static_cast<std::int64_t>(i);
  }
  if (external_ids.size() != n) throw InputError("external id count does not match centroids");

  RegionMap map;
  map.centroids_ = centroids;
  map.external_ids_ = std::move(external_ids);
  map.neighbor_k_ = neighbor_k;
  map.distance_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = haversine_miles(centroids[i], centroids[j]);
      map.distance_[i * n + j] = d;
      map.distance_[j * n + i] = d;
      if (d == 0.0) ++map.coincident_pairs_;
    }
  }
  map.neighbors_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& order = map.neighbors_[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    // Distances equal to the nano-mile are ties, so evenly spaced centroids
    // whose coordinates are not exact binary fractions still order by index.
    const auto key = [&](std::size_t j) { return std::llround(map.distance(i, j) * 1e9); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  }
  return map;
}

std::vector<std::size_t> neighbors(const RegionMap& map, std::size_t region, std::size_t k) {
  const auto& order = map.neighbor_order(region);
  const std::size_t take = std::min(k, order.size());
  return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take)};
}

RegionMap load_regions(std::istream& in, std::size_t neighbor_k) {
  std::vector<LatLon> centroids;
  std::vector<std::int64_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::int64_t id = 0;
    LatLon c;
    if (!(fields >> id >> c.lat >> c.lon)) {
      if (centroids.empty() && line_no == 1) continue;  // header
      throw InputError("regions line " + std::to_string(line_no) + ": expected id,lat,lon");
    }
    ids.push_back(id);
    centroids.push_back(c);
  }
  return build_region_map(centroids, neighbor_k, std::move(ids));
}

RegionMap load_regions_file(const std::string& path, std::size_t neighbor_k) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open regions file " + path);
  return load_regions(in, neighbor_k);
}

void WorldConfig::validate() const {
  if (intervals_per_day < 1) throw InputError("intervals_per_day must be >= 1");
  if (!(battery_capacity > 0.0)) throw InputError("battery_capacity must be positive");
  if (!(battery_threshold >= 0.0 && battery_threshold < battery_capacity)) {
    throw InputError("battery_threshold must lie in [0, battery_capacity)");
  }
  if (!(meters_per_mile > 0.0)) throw InputError("meters_per_mile must be positive");
}

}  // namespace fleetlab
