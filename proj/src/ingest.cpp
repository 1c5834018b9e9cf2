#include "fleetlab/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace fleetlab {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string normalize_header(const std::string& raw) {
  std::string out;
  for (unsigned char c : raw) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// RFC 4180 style split: quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::optional<double> parse_number(std::string text) {
  text.erase(std::remove(text.begin(), text.end(), ','), text.end());
  text = trim(text);
  if (text.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// A coordinate pair such as "-87.62519, 41.87887" (longitude first, as in the
// operator exports). A value outside [-90, 90] identifies the longitude.
std::optional<LatLon> parse_coordinate_pair(std::string text) {
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  double a = 0.0, b = 0.0;
  if (!(in >> a >> b)) return std::nullopt;
  LatLon p{b, a};
  if (std::abs(a) <= 90.0 && std::abs(b) > 90.0) p = LatLon{a, b};
  if (std::abs(p.lat) > 90.0 || std::abs(p.lon) > 180.0) return std::nullopt;
  return p;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::optional<Timestamp> build(int y, int mo, int d, int h, int mi, int s) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return Timestamp{days * kSecondsPerDay + h * 3600 + mi * 60 + s};
}

// "H:MM[:SS]" -> (h, m, s)
bool parse_clock(const std::string& text, int& h, int& mi, int& s) {
  const auto parts = split_on(text, ':');
  if (parts.size() < 2 || parts.size() > 3) return false;
  for (const auto& p : parts) {
    if (!all_digits(p)) return false;
  }
  h = std::stoi(parts[0]);
  mi = std::stoi(parts[1]);
  s = parts.size() == 3 ? std::stoi(parts[2]) : 0;
  return true;
}

}  // namespace

std::int64_t Timestamp::day() const { return floor_div(seconds, kSecondsPerDay); }
std::int64_t Timestamp::second_of_day() const { return seconds - day() * kSecondsPerDay; }

Timestamp make_timestamp(int year, int month, int day, int hour, int minute, int second) {
  auto ts = build(year, month, day, hour, minute, second);
  if (!ts) throw InputError("invalid calendar timestamp");
  return *ts;
}

std::string format_date(std::int64_t day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::optional<Timestamp> parse_timestamp(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) return std::nullopt;

  if (text.find('/') != std::string::npos) {
    std::istringstream in(text);
    std::string date, clock, meridiem;
    in >> date >> clock >> meridiem;
    const auto dparts = split_on(date, '/');
    if (dparts.size() != 3 || !all_digits(dparts[0]) || !all_digits(dparts[1]) || !all_digits(dparts[2])) {
      return std::nullopt;
    }
    int h = 0, mi = 0, s = 0;
    if (!clock.empty() && !parse_clock(clock, h, mi, s)) return std::nullopt;
    for (auto& c : meridiem) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (meridiem == "AM" || meridiem == "PM") {
      if (h < 1 || h > 12) return std::nullopt;
      h %= 12;
      if (meridiem == "PM") h += 12;
    } else if (!meridiem.empty()) {
      return std::nullopt;
    }
    return build(std::stoi(dparts[2]), std::stoi(dparts[0]), std::stoi(dparts[1]), h, mi, s);
  }

  // ISO-8601
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const std::string y = text.substr(0, 4), mo = text.substr(5, 2), d = text.substr(8, 2);
  if (!all_digits(y) || !all_digits(mo) || !all_digits(d)) return std::nullopt;
  int h = 0, mi = 0, s = 0;
  if (text.size() > 10) {
    if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
    std::string clock = text.substr(11);
    const auto cut = clock.find_first_of("Z+-");
    if (cut != std::string::npos) clock = clock.substr(0, cut);
    const auto frac = clock.find('.');
    if (frac != std::string::npos) clock = clock.substr(0, frac);
    if (!parse_clock(clock, h, mi, s)) return std::nullopt;
  }
  return build(std::stoi(y), std::stoi(mo), std::stoi(d), h, mi, s);
}

ParseResult parse_trips(std::istream& in, const RegionMap& map) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("trip file is empty (missing header)");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::map<std::string, std::size_t> columns;
  const auto header = split_csv(line);
  for (std::size_t c = 0; c < header.size(); ++c) columns.emplace(normalize_header(header[c]), c);

  const auto find = [&](std::initializer_list<const char*> names) -> std::optional<std::size_t> {
    for (const char* n : names) {
      const auto it = columns.find(n);
      if (it != columns.end()) return it->second;
    }
    return std::nullopt;
  };
  const auto require = [&](std::initializer_list<const char*> names, const char* label) {
    const auto c = find(names);
    if (!c) throw InputError(std::string("missing required column: ") + label);
    return *c;
  };

  const std::size_t c_id = require({"tripid"}, "Trip ID");
  const std::size_t c_start = require({"starttime"}, "Start Time");
  const std::size_t c_end = require({"endtime"}, "End Time");
  const std::size_t c_dist = require({"tripdistance"}, "Trip Distance");
  const std::size_t c_dur = require({"tripduration"}, "Trip Duration");
  const auto c_op = find({"vehicleoperator", "vendor", "operator"});

  struct LocationColumns {
    std::optional<std::size_t> pair, lat, lon, code;
  };
  const auto location = [&](const char* prefix) {
    const std::string p = prefix;
    LocationColumns lc;
    lc.pair = find({(p + "region").c_str(), (p + "centroidlocation").c_str(), (p + "location").c_str()});
    lc.lat = find({(p + "centroidlatitude").c_str(), (p + "latitude").c_str()});
    lc.lon = find({(p + "centroidlongitude").c_str(), (p + "longitude").c_str()});
    lc.code = find({(p + "communityareanumber").c_str(), (p + "regionid").c_str()});
    if (!lc.pair && !(lc.lat && lc.lon) && !lc.code) {
      throw InputError(std::string("missing required column: ") + (p == "start" ? "Start Region" : "End Region"));
    }
    return lc;
  };
  const LocationColumns start_loc = location("start");
  const LocationColumns end_loc = location("end");

  const auto resolve = [&](const std::vector<std::string>& f, const LocationColumns& lc) -> std::optional<std::size_t> {
    if (lc.pair && *lc.pair < f.size() && !trim(f[*lc.pair]).empty()) {
      const std::string v = trim(f[*lc.pair]);
      if (all_digits(v)) return map.index_of(std::stoll(v));
      if (const auto p = parse_coordinate_pair(v)) return map.nearest(*p);
      return std::nullopt;
    }
    if (lc.lat && lc.lon && *lc.lat < f.size() && *lc.lon < f.size()) {
      const auto lat = parse_number(f[*lc.lat]);
      const auto lon = parse_number(f[*lc.lon]);
      if (lat && lon && std::abs(*lat) <= 90.0 && std::abs(*lon) <= 180.0) return map.nearest({*lat, *lon});
    }
    if (lc.code && *lc.code < f.size()) {
      const auto v = parse_number(f[*lc.code]);
      if (v && *v == std::floor(*v)) return map.index_of(static_cast<std::int64_t>(*v));
    }
    return std::nullopt;
  };

  ParseResult result;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    const auto field = [&](std::size_t c) { return c < f.size() ? f[c] : std::string{}; };
    try {
      TripRecord rec;
      rec.trip_id = trim(field(c_id));
      const auto start = parse_timestamp(field(c_start));
      const auto end = parse_timestamp(field(c_end));
      const auto dist = parse_number(field(c_dist));
      const auto dur = parse_number(field(c_dur));
      const auto from = resolve(f, start_loc);
      const auto to = resolve(f, end_loc);
      if (!start || !end || !dist || !dur || !from || !to || *end < *start || *dist < 0.0 || *dur < 0.0) {
        ++result.skipped;
        continue;
      }
      rec.start_time = *start;
      rec.end_time = *end;
      rec.distance_m = *dist;
      rec.duration_s = *dur;
      rec.start_region = *from;
      rec.end_region = *to;
      if (c_op) rec.op = trim(field(*c_op));
      result.trips.push_back(std::move(rec));
    } catch (const InputError&) {
      ++result.skipped;  // unknown region code
    }
  }
  return result;
}

DemandTensor::DemandTensor(int intervals, std::size_t regions)
    : intervals_(intervals), regions_(regions) {
  if (intervals < 1 || regions < 1) throw InputError("demand tensor needs positive dimensions");
  pool_.resize(static_cast<std::size_t>(intervals) * regions * regions);
}

void DemandTensor::add_trip(int t, std::size_t i, std::size_t j, double distance_m, double duration_s) {
  if (t < 0 || t >= intervals_ || i >= regions_ || j >= regions_) throw InputError("demand cell out of range");
  pool_[index(t, i, j)].push_back(TripAttr{distance_m, duration_s, j});
}

std::int64_t DemandTensor::origin_total(int t, std::size_t i) const {
  std::int64_t s = 0;
  for (std::size_t j = 0; j < regions_; ++j) s += count(t, i, j);
  return s;
}

std::int64_t DemandTensor::interval_total(int t) const {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < regions_; ++i) s += origin_total(t, i);
  return s;
}

std::int64_t DemandTensor::total() const {
  std::int64_t s = 0;
  for (int t = 0; t < intervals_; ++t) s += interval_total(t);
  return s;
}

DemandTensor aggregate_demand(const std::vector<TripRecord>& trips, const RegionMap& map, int intervals,
                              std::int64_t day) {
  DemandTensor tensor(intervals, map.size());
  for (const auto& trip : trips) {
    if (trip.start_time.day() != day) throw InputError("trip " + trip.trip_id + " is outside the aggregated day");
    const auto t = static_cast<int>(trip.start_time.second_of_day() * intervals / kSecondsPerDay);
    tensor.add_trip(t, trip.start_region, trip.end_region, trip.distance_m, trip.duration_s);
  }
  return tensor;
}

std::vector<std::int64_t> trip_days(const std::vector<TripRecord>& trips) {
  std::set<std::int64_t> days;
  for (const auto& t : trips) days.insert(t.start_time.day());
  return {days.begin(), days.end()};
}

std::vector<std::vector<std::int64_t>> cumulative_net_inflow(const DemandTensor& tensor) {
  const std::size_t n = tensor.regions();
  std::vector<std::vector<std::int64_t>> flows(static_cast<std::size_t>(tensor.intervals()),
                                               std::vector<std::int64_t>(n, 0));
  std::vector<std::int64_t> running(n, 0);
  for (int t = 0; t < tensor.intervals(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto c = tensor.count(t, i, j);
        running[i] -= c;
        running[j] += c;
      }
    }
    flows[static_cast<std::size_t>(t)] = running;
  }
  return flows;
}

std::vector<int> region_demand_deciles(const std::vector<DemandTensor>& history, std::size_t regions) {
  std::vector<double> mean(regions, 0.0);
  for (const auto& day : history) {
    for (int t = 0; t < day.intervals(); ++t) {
      for (std::size_t i = 0; i < regions; ++i) mean[i] += static_cast<double>(day.origin_total(t, i));
    }
  }
  std::vector<int> decile(regions, 0);
  for (std::size_t i = 0; i < regions; ++i) {
    std::size_t below = 0;
    for (std::size_t k = 0; k < regions; ++k) below += mean[k] < mean[i] ? 1 : 0;
    decile[i] = static_cast<int>(10 * below / regions);
  }
  return decile;
}

BackgroundResult estimate_background_demand(const DemandTensor& tensor,
                                            const std::vector<std::vector<std::int64_t>>& flows,
                                            const std::vector<DemandTensor>& history, std::uint64_t seed) {
  const std::size_t n = tensor.regions();
  const int T = tensor.intervals();
  if (flows.size() != static_cast<std::size_t>(T)) throw InputError("flow series length must equal interval count");
  for (const auto& h : history) {
    if (h.regions() != n || h.intervals() != T) throw InputError("history tensor shape mismatch");
  }

  const auto deciles = region_demand_deciles(history, n);
  BackgroundResult result{tensor, {}, {}, 0};
  Rng rng(seed);

  for (int t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (flows[static_cast<std::size_t>(t)].size() != n) throw InputError("flow series width mismatch");
      if (flows[static_cast<std::size_t>(t)][i] >= 0 || tensor.origin_total(t, i) != 0) continue;

      // Historical cells in the same class that actually carried demand.
      std::vector<std::pair<const DemandTensor*, std::size_t>> cells;
      for (const auto& day : history) {
        for (std::size_t r = 0; r < n; ++r) {
          if (deciles[r] == deciles[i] && day.origin_total(t, r) > 0) cells.emplace_back(&day, r);
        }
      }
      if (cells.empty()) {
        result.unmatched.push_back({t, i, 0});
        continue;
      }
      const auto& [day, region] = cells[uniform_index(rng, cells.size())];
      const std::int64_t count = day->origin_total(t, region);

      std::vector<TripAttr> pooled;
      for (const auto& [d, r] : cells) {
        for (std::size_t j = 0; j < n; ++j) {
          for (const auto& a : d->cell(t, r, j)) pooled.push_back(a);
        }
      }
      for (std::int64_t k = 0; k < count; ++k) {
        const TripAttr& a = pooled[uniform_index(rng, pooled.size())];
        result.tensor.add_trip(t, i, a.dest, a.distance_m, a.duration_s);
      }
      result.synthesized.push_back({t, i, count});
      result.synthesized_trips += count;
    }
  }
  return result;
}

DemandTensor generate_synthetic_demand(const RegionMap& map, int intervals,
                                       const std::vector<std::vector<double>>& base_rates,
                                       const std::vector<Surge>& surges, std::uint64_t seed) {
  const std::size_t n = map.size();
  if (base_rates.size() != n) throw InputError("base rate matrix must be N x N");
  for (const auto& row : base_rates) {
    if (row.size() != n) throw InputError("base rate matrix must be N x N");
    for (double r : row) {
      if (!(r >= 0.0)) throw InputError("base rates must be nonnegative");
    }
  }
  for (const auto& s : surges) {
    if (!(s.multiplier >= 0.0)) throw InputError("surge multipliers must be nonnegative");
  }

  DemandTensor tensor(intervals, n);
  Rng rng(seed);
  for (int t = 0; t < intervals; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double m = 1.0;
      for (const auto& s : surges) {
        if (t >= s.first_interval && t <= s.last_interval &&
            std::find(s.regions.begin(), s.regions.end(), i) != s.regions.end()) {
          m *= s.multiplier;
        }
      }
      for (std::size_t j = 0; j < n; ++j) {
        const std::int64_t c = poisson(rng, base_rates[i][j] * m);
        for (std::int64_t k = 0; k < c; ++k) {
          const double dist = uniform(rng, 200.0, 8000.0);
          const double speed = uniform(rng, 2.0, 5.0);
          tensor.add_trip(t, i, j, dist, dist / speed);
        }
      }
    }
  }
  return tensor;
}

namespace {

std::pair<int, std::size_t> read_dims(const std::string& line) {
  int T = 0;
  std::size_t n = 0;
  if (std::sscanf(line.c_str(), "# intervals=%d regions=%zu", &T, &n) != 2) {
    throw InputError("demand file must start with '# intervals=<T> regions=<N>'");
  }
  return {T, n};
}

}  // namespace

void write_demand_counts(std::ostream& out, const DemandTensor& tensor) {
  out << "# intervals=" << tensor.intervals() << " regions=" << tensor.regions() << "\n";
  out << "t,i,j,count\n";
  for (int t = 0; t < tensor.intervals(); ++t) {
    for (std::size_t i = 0; i < tensor.regions(); ++i) {
      for (std::size_t j = 0; j < tensor.regions(); ++j) {
        if (const auto c = tensor.count(t, i, j); c > 0) out << t << ',' << i << ',' << j << ',' << c << "\n";
      }
    }
  }
}

DemandTensor read_demand_counts(std::istream& in, double default_distance_m, double default_duration_s) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty demand file");
  const auto [T, n] = read_dims(line);
  DemandTensor tensor(T, n);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
    long long t = 0, i = 0, j = 0, c = 0;
    if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%lld", &t, &i, &j, &c) != 4 || c < 0 || i < 0 || j < 0) {
      throw InputError("bad demand row: " + line);
    }
    for (long long k = 0; k < c; ++k) {
      tensor.add_trip(static_cast<int>(t), static_cast<std::size_t>(i), static_cast<std::size_t>(j), default_distance_m,
                      default_duration_s);
    }
  }
  return tensor;
}

void write_demand_trips(std::ostream& out, const DemandTensor& tensor) {
  out << "# intervals=" << tensor.intervals() << " regions=" << tensor.regions() << "\n";
  out << "t,i,j,distance_m,duration_s\n";
  out.precision(17);
  for (int t = 0; t < tensor.intervals(); ++t) {
    for (std::size_t i = 0; i < tensor.regions(); ++i) {
      for (std::size_t j = 0; j < tensor.regions(); ++j) {
        for (const auto& a : tensor.cell(t, i, j)) {
          out << t << ',' << i << ',' << j << ',' << a.distance_m << ',' << a.duration_s << "\n";
        }
      }
    }
  }
}

DemandTensor read_demand_trips(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty demand file");
  const auto [T, n] = read_dims(line);
  DemandTensor tensor(T, n);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
    long long t = 0, i = 0, j = 0;
    double d = 0.0, s = 0.0;
    if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%lf,%lf", &t, &i, &j, &d, &s) != 5 || i < 0 || j < 0) {
      throw InputError("bad trip row: " + line);
    }
    tensor.add_trip(static_cast<int>(t), static_cast<std::size_t>(i), static_cast<std::size_t>(j), d, s);
  }
  return tensor;
}

}  // namespace fleetlab
