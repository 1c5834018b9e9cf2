#pragma once

#include <iosfwd>
#include <vector>

#include "fleetlab/ingest.hpp"

namespace fleetlab {

/// Dense real-valued [t][i][j] tensor.
struct RealTensor {
  int intervals = 0;
  std::size_t regions = 0;
  std::vector<double> values;

  RealTensor() = default;
  RealTensor(int t, std::size_t n) : intervals(t), regions(n), values(static_cast<std::size_t>(t) * n * n, 0.0) {}

  double& at(int t, std::size_t i, std::size_t j) { return values[(static_cast<std::size_t>(t) * regions + i) * regions + j]; }
  double at(int t, std::size_t i, std::size_t j) const {
    return values[(static_cast<std::size_t>(t) * regions + i) * regions + j];
  }
  /// Sum over destinations.
  double origin(int t, std::size_t i) const;

  bool operator==(const RealTensor&) const = default;
};

/// Source of predicted demand for the schedulers.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual int intervals() const = 0;
  virtual std::size_t regions() const = 0;
  /// Predicted demand for intervals [t_start, t_start + horizon).
  virtual RealTensor predict(int t_start, int horizon) const = 0;
};

/// Per-interval historical mean demand.
class DemandPredictor final : public Forecaster {
 public:
  DemandPredictor() = default;
  DemandPredictor(RealTensor mean_table, int training_days);

  int intervals() const override { return table_.intervals; }
  std::size_t regions() const override { return table_.regions; }
  RealTensor predict(int t_start, int horizon) const override;

  const RealTensor& mean_table() const { return table_; }
  int training_day_count() const { return training_days_; }

 private:
  RealTensor table_;
  int training_days_ = 0;
};

/// Arithmetic mean over days, summed in index order.
DemandPredictor fit_predictor(const std::vector<DemandTensor>& history);

/// Free-function form of Forecaster::predict.
RealTensor predict(const Forecaster& forecaster, int t_start, int horizon);

/// Origin marginals of the predictor summed over the whole day.
std::vector<double> daily_origin_demand(const Forecaster& forecaster);

/// A representative integer day: counts are the rounded (half-up) means and
/// each trip takes the mean attributes of its cell in `history` (or of all
/// history trips when the cell never occurred).
DemandTensor materialize_expected_day(const DemandPredictor& predictor, const std::vector<DemandTensor>& history);

/// Same `t,i,j,value` layout as demand counts, with real values.
void write_predictor(std::ostream& out, const DemandPredictor& predictor);
DemandPredictor read_predictor(std::istream& in);

}  // namespace fleetlab
