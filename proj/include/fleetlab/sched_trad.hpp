#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fleetlab/engine.hpp"
#include "fleetlab/scheduler.hpp"

namespace fleetlab {

/// Demand-supply matching: fleet split in proportion to historical origin
/// demand, integerized by largest remainder.
std::vector<int> sdsm_allocate(const TradScheduleRequest& request, const std::vector<double>& historical_origin_demand);

/// Everything the GA needs to score an allocation: one simulated day with no
/// ASMVs on a fixed demand realization.
struct GaFitnessEnv {
  const Engine* engine = nullptr;
  DemandTensor demand;
  std::uint64_t seed = 0;
};

struct GaParams {
  int population = 32;
  int generations = 100;
  double mutation_rate = 0.1;
  int elitism = 2;
  std::uint64_t seed = 0;
  /// Chromosomes injected into the initial population before random fill.
  std::vector<std::vector<int>> initial;
};

struct GaResult {
  std::vector<int> best;
  double best_fitness = 0.0;
  std::vector<double> best_per_generation;  // index 0 = initial population
};

/// D_rate of one traditional-only day starting from `allocation`.
double trad_only_fitness(const GaFitnessEnv& env, const std::vector<int>& allocation);

GaResult ga_allocate(const TradScheduleRequest& request, const GaFitnessEnv& env, const GaParams& params);

class SdsmScheduler final : public TradScheduler {
 public:
  explicit SdsmScheduler(std::vector<double> historical_origin_demand)
      : historical_(std::move(historical_origin_demand)) {}
  std::string name() const override { return "sdsm"; }
  std::vector<int> allocate(const TradScheduleRequest& request) override {
    return sdsm_allocate(request, historical_);
  }

 private:
  std::vector<double> historical_;
};

/// Runs the GA once and reuses its answer for the same fleet size.
class GaScheduler final : public TradScheduler {
 public:
  GaScheduler(GaFitnessEnv env, GaParams params) : env_(std::move(env)), params_(std::move(params)) {}
  std::string name() const override { return "ga"; }
  std::vector<int> allocate(const TradScheduleRequest& request) override;
  const GaResult& last_result() const { return result_; }

 private:
  GaFitnessEnv env_;
  GaParams params_;
  GaResult result_;
  int cached_fleet_ = -1;
};

/// Replays an externally produced allocation (`region,count` lines), the
/// slot for schedulers that live outside this project.
class FileTradScheduler final : public TradScheduler {
 public:
  explicit FileTradScheduler(const std::string& path);
  FileTradScheduler(std::vector<int> allocation, std::string label)
      : allocation_(std::move(allocation)), label_(std::move(label)) {}
  std::string name() const override { return "file:" + label_; }
  std::vector<int> allocate(const TradScheduleRequest& request) override;

 private:
  std::vector<int> allocation_;
  std::string label_;
};

/// Reads `region,count` lines (region = dense index; header/comments skipped).
std::vector<int> read_allocation(std::istream& in);

}  // namespace fleetlab
