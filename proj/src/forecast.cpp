#include "fleetlab/forecast.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace fleetlab {

double RealTensor::origin(int t, std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < regions; ++j) s += at(t, i, j);
  return s;
}

DemandPredictor::DemandPredictor(RealTensor mean_table, int training_days)
    : table_(std::move(mean_table)), training_days_(training_days) {
  for (double v : table_.values) {
    if (!(v >= 0.0)) throw InputError("predictor means must be nonnegative");
  }
}

RealTensor DemandPredictor::predict(int t_start, int horizon) const {
  if (horizon <= 0) throw InputError("forecast horizon must be positive");
  if (t_start < 0 || t_start + horizon > table_.intervals) throw InputError("forecast window exceeds the day");
  RealTensor out(horizon, table_.regions);
  const std::size_t plane = table_.regions * table_.regions;
  std::copy_n(table_.values.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t_start) * plane),
              static_cast<std::size_t>(horizon) * plane, out.values.begin());
  return out;
}

RealTensor predict(const Forecaster& forecaster, int t_start, int horizon) {
  return forecaster.predict(t_start, horizon);
}

DemandPredictor fit_predictor(const std::vector<DemandTensor>& history) {
  if (history.empty()) throw InputError("predictor needs at least one training day");
  const int T = history.front().intervals();
  const std::size_t n = history.front().regions();
  RealTensor sum(T, n);
  for (const auto& day : history) {
    if (day.intervals() != T || day.regions() != n) throw InputError("training days differ in shape");
    for (int t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) sum.at(t, i, j) += static_cast<double>(day.count(t, i, j));
      }
    }
  }
  const double days = static_cast<double>(history.size());
  for (double& v : sum.values) v /= days;
  return DemandPredictor(std::move(sum), static_cast<int>(history.size()));
}

std::vector<double> daily_origin_demand(const Forecaster& forecaster) {
  const RealTensor day = forecaster.predict(0, forecaster.intervals());
  std::vector<double> out(day.regions, 0.0);
  for (int t = 0; t < day.intervals; ++t) {
    for (std::size_t i = 0; i < day.regions; ++i) out[i] += day.origin(t, i);
  }
  return out;
}

DemandTensor materialize_expected_day(const DemandPredictor& predictor, const std::vector<DemandTensor>& history) {
  const int T = predictor.intervals();
  const std::size_t n = predictor.regions();
  double all_d = 0.0, all_s = 0.0;
  std::int64_t all_n = 0;
  for (const auto& day : history) {
    for (int t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          for (const auto& a : day.cell(t, i, j)) {
            all_d += a.distance_m;
            all_s += a.duration_s;
            ++all_n;
          }
        }
      }
    }
  }
  const double fallback_d = all_n ? all_d / static_cast<double>(all_n) : kMetersPerMile;
  const double fallback_s = all_n ? all_s / static_cast<double>(all_n) : 400.0;

  DemandTensor out(T, n);
  for (int t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto count = static_cast<std::int64_t>(std::floor(predictor.mean_table().at(t, i, j) + 0.5));
        if (count == 0) continue;
        double d = 0.0, s = 0.0;
        std::int64_t k = 0;
        for (const auto& day : history) {
          for (const auto& a : day.cell(t, i, j)) {
            d += a.distance_m;
            s += a.duration_s;
            ++k;
          }
        }
        const double md = k ? d / static_cast<double>(k) : fallback_d;
        const double ms = k ? s / static_cast<double>(k) : fallback_s;
        for (std::int64_t c = 0; c < count; ++c) out.add_trip(t, i, j, md, ms);
      }
    }
  }
  return out;
}

void write_predictor(std::ostream& out, const DemandPredictor& predictor) {
  const auto& tab = predictor.mean_table();
  out << "# intervals=" << tab.intervals << " regions=" << tab.regions << " days=" << predictor.training_day_count()
      << "\n";
  out << "t,i,j,mean\n";
  char buf[64];
  for (int t = 0; t < tab.intervals; ++t) {
    for (std::size_t i = 0; i < tab.regions; ++i) {
      for (std::size_t j = 0; j < tab.regions; ++j) {
        if (const double v = tab.at(t, i, j); v != 0.0) {
          std::snprintf(buf, sizeof buf, "%.17g", v);
          out << t << ',' << i << ',' << j << ',' << buf << "\n";
        }
      }
    }
  }
}

DemandPredictor read_predictor(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty predictor file");
  int T = 0, days = 0;
  std::size_t n = 0;
  if (std::sscanf(line.c_str(), "# intervals=%d regions=%zu days=%d", &T, &n, &days) != 3 || T < 1 || n < 1) {
    throw InputError("predictor file must start with '# intervals=<T> regions=<N> days=<D>'");
  }
  RealTensor tab(T, n);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
    int t = 0;
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "%d,%zu,%zu,%lf", &t, &i, &j, &v) != 4 || t < 0 || t >= T || i >= n || j >= n) {
      throw InputError("bad predictor row: " + line);
    }
    tab.at(t, i, j) = v;
  }
  return DemandPredictor(std::move(tab), days);
}

}  // namespace fleetlab
