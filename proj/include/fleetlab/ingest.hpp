#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fleetlab/random.hpp"
#include "fleetlab/world.hpp"

namespace fleetlab {

/// Naive local wall-clock time, stored as seconds since 1970-01-01 00:00.
struct Timestamp {
  std::int64_t seconds = 0;

  std::int64_t day() const;              // days since epoch (floor)
  std::int64_t second_of_day() const;    // [0, 86400)
  auto operator<=>(const Timestamp&) const = default;
};

/// Parses `M/D/YYYY H:MM[:SS] [AM|PM]` or ISO-8601 `YYYY-MM-DD[T ]HH:MM[:SS]`
/// (a trailing `Z` or UTC offset is dropped).
std::optional<Timestamp> parse_timestamp(const std::string& text);
Timestamp make_timestamp(int year, int month, int day, int hour = 0, int minute = 0, int second = 0);
std::string format_date(std::int64_t day);  // YYYY-MM-DD

struct TripRecord {
  std::string trip_id;
  Timestamp start_time;
  Timestamp end_time;
  double distance_m = 0.0;
  double duration_s = 0.0;
  std::size_t start_region = 0;
  std::size_t end_region = 0;
  std::string op;  // vehicle operator tag
};

struct ParseResult {
  std::vector<TripRecord> trips;
  std::size_t skipped = 0;
};

/// Reads delimited trip records.
///
/// Required columns (matched case-insensitively): Trip ID, Start Time,
/// End Time, Trip Distance, Trip Duration, and a start/end location given
/// either as a coordinate pair column (`Start Region`), as separate
/// `Start Centroid Latitude`/`Longitude` columns, or as a region code column
/// (`Start Community Area Number`). `Vehicle Operator` / `Vendor` is
/// optional. Coordinates snap to the nearest centroid; codes go through the
/// map's external-id table. Rows that fail to parse are skipped and counted.
ParseResult parse_trips(std::istream& in, const RegionMap& map);

/// Trip attributes kept per demand cell.
struct TripAttr {
  double distance_m = 0.0;
  double duration_s = 0.0;
  std::size_t dest = 0;  // only meaningful in pooled samples

  bool operator==(const TripAttr&) const = default;
};

/// Requests per (interval, origin, destination) with sampled trip attributes.
class DemandTensor {
 public:
  DemandTensor() = default;
  DemandTensor(int intervals, std::size_t regions);

  int intervals() const { return intervals_; }
  std::size_t regions() const { return regions_; }

  std::int64_t count(int t, std::size_t i, std::size_t j) const { return static_cast<std::int64_t>(cell(t, i, j).size()); }
  const std::vector<TripAttr>& cell(int t, std::size_t i, std::size_t j) const { return pool_[index(t, i, j)]; }
  void add_trip(int t, std::size_t i, std::size_t j, double distance_m, double duration_s);

  std::int64_t origin_total(int t, std::size_t i) const;
  std::int64_t interval_total(int t) const;
  std::int64_t total() const;

  bool operator==(const DemandTensor&) const = default;

 private:
  std::size_t index(int t, std::size_t i, std::size_t j) const {
    return (static_cast<std::size_t>(t) * regions_ + i) * regions_ + j;
  }

  int intervals_ = 0;
  std::size_t regions_ = 0;
  std::vector<std::vector<TripAttr>> pool_;
};

/// Buckets one day's trips into intervals by start time
/// (interval = floor(second_of_day * T / 86400)).
DemandTensor aggregate_demand(const std::vector<TripRecord>& trips, const RegionMap& map, int intervals,
                              std::int64_t day);

/// Distinct trip start days in ascending order.
std::vector<std::int64_t> trip_days(const std::vector<TripRecord>& trips);

/// Cumulative (inflow - outflow) per region through each interval, [t][i].
std::vector<std::vector<std::int64_t>> cumulative_net_inflow(const DemandTensor& tensor);

struct BackgroundCell {
  int t = 0;
  std::size_t region = 0;
  std::int64_t trips = 0;
};

struct BackgroundResult {
  DemandTensor tensor;
  std::vector<BackgroundCell> synthesized;  // cells that received trips
  std::vector<BackgroundCell> unmatched;    // eligible cells with no history
  std::int64_t synthesized_trips = 0;
};

/// Adds synthetic trips to each region-interval with negative cumulative net
/// inflow and zero recorded demand. Count and attributes come from historical
/// cells of the same interval-of-day whose origin region falls in the same
/// demand decile; cells with no such history are left unchanged and listed.
BackgroundResult estimate_background_demand(const DemandTensor& tensor,
                                            const std::vector<std::vector<std::int64_t>>& flows,
                                            const std::vector<DemandTensor>& history, std::uint64_t seed);

/// Demand decile (0..9) of each region by mean daily origin demand across
/// `history`; ties share the decile of their first rank.
std::vector<int> region_demand_deciles(const std::vector<DemandTensor>& history, std::size_t regions);

struct Surge {
  int first_interval = 0;
  int last_interval = 0;  // inclusive
  std::vector<std::size_t> regions;
  double multiplier = 1.0;
};

/// Poisson demand: counts[t][i][j] ~ Poisson(base[i][j] * m(t, i)), where
/// m multiplies every surge covering (t, i). Distances ~ U[200, 8000] m,
/// speeds ~ U[2, 5] m/s.
DemandTensor generate_synthetic_demand(const RegionMap& map, int intervals,
                                       const std::vector<std::vector<double>>& base_rates,
                                       const std::vector<Surge>& surges, std::uint64_t seed);

/// `t,i,j,count` rows for nonzero cells, preceded by a dimension comment.
void write_demand_counts(std::ostream& out, const DemandTensor& tensor);
/// Reads the counts format. Trips get the given default attributes.
DemandTensor read_demand_counts(std::istream& in, double default_distance_m = kMetersPerMile,
                                double default_duration_s = 400.0);
/// `t,i,j,distance_m,duration_s`, one row per trip.
void write_demand_trips(std::ostream& out, const DemandTensor& tensor);
DemandTensor read_demand_trips(std::istream& in);

}  // namespace fleetlab
