#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace fleetlab {

/// Raised for malformed inputs (bad coordinates, inconsistent shapes, ...).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kEarthRadiusMiles = 3958.7613;
inline constexpr double kMetersPerMile = 1609.344;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// Great-circle distance in miles.
double haversine_miles(const LatLon& a, const LatLon& b);

/// Immutable region geometry of a simulated city.
///
/// Regions are dense 0-based indices. `external_ids` keeps the identifiers
/// used by outside data (community-area codes); by default they equal the
/// index.
class RegionMap {
 public:
  RegionMap() = default;

  std::size_t size() const { return centroids_.size(); }
  const std::vector<LatLon>& centroids() const { return centroids_; }
  const std::vector<std::int64_t>& external_ids() const { return external_ids_; }
  std::size_t neighbor_k() const { return neighbor_k_; }

  double distance(std::size_t i, std::size_t j) const { return distance_[i * size() + j]; }

  /// Pairs of regions sharing an identical centroid.
  std::size_t coincident_pairs() const { return coincident_pairs_; }

  /// Full precomputed neighbor list of `region`: every other region sorted by
  /// distance, ties to the lower index. Length N-1.
  const std::vector<std::size_t>& neighbor_order(std::size_t region) const;

  /// Index of an external id, or throws InputError.
  std::size_t index_of(std::int64_t external_id) const;

  /// Index of the centroid closest to `p` (ties to the lower index).
  std::size_t nearest(const LatLon& p) const;

 private:
  friend RegionMap build_region_map(const std::vector<LatLon>&, std::size_t,
                                    std::vector<std::int64_t>);

  std::vector<LatLon> centroids_;
  std::vector<std::int64_t> external_ids_;
  std::vector<double> distance_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::size_t neighbor_k_ = 8;
  std::size_t coincident_pairs_ = 0;
};

/// Builds the map. Distances use haversine; `external_ids` may be empty.
RegionMap build_region_map(const std::vector<LatLon>& centroids, std::size_t neighbor_k = 8,
                           std::vector<std::int64_t> external_ids = {});

/// First min(k, N-1) entries of the neighbor order of `region`.
std::vector<std::size_t> neighbors(const RegionMap& map, std::size_t region, std::size_t k);

/// Reads `id,lat,lon` lines. A header line and `#` comments are skipped.
RegionMap load_regions(std::istream& in, std::size_t neighbor_k = 8);
RegionMap load_regions_file(const std::string& path, std::size_t neighbor_k = 8);

struct WorldConfig {
  int intervals_per_day = 24;
  double battery_capacity = 15.0;   // miles
  double battery_threshold = 1.0;   // miles
  double meters_per_mile = kMetersPerMile;
  std::uint64_t seed = 0;

  /// Throws InputError when an invariant is violated.
  void validate() const;
};

}  // namespace fleetlab
