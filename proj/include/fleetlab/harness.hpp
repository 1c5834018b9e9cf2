#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetlab/analytics.hpp"
#include "fleetlab/forecast.hpp"
#include "fleetlab/learn.hpp"
#include "fleetlab/scenario.hpp"
#include "fleetlab/sched_asmv.hpp"
#include "fleetlab/sched_trad.hpp"

namespace fleetlab {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
  // world
  std::string regions_path;     // empty: scenario preset
  std::string scenario = "desk";
  int intervals = 0;            // 0: preset value
  std::size_t neighbor_k = 8;
  double move_range_miles = 5.0;
  std::size_t service_neighbors = 0;
  // demand: exactly one source
  std::string trips_path;
  std::vector<std::string> tensor_paths;
  int synthetic_days = 0;
  int train_days = 0;           // leading days used for the predictor and training; 0: half
  int eval_days = 0;            // 0: every remaining day
  bool background = false;
  // fleet
  std::optional<int> traditional;   // fixed traditional fleet
  std::optional<int> fleet_total;   // total fleet; ASMVs are carved out of it
  std::optional<int> asmv_count;
  std::optional<double> asmv_ratio;
  double fault_rate = 0.0;
  // schedulers
  std::string trad_sched = "sdsm";
  GaParams ga;
  std::string asmv_sched = "none";
  std::string policy_path;
  bool greedy = true;
  TrainConfig train;
  // sweep
  std::string sweep_axis = "ratio";
  std::vector<double> sweep_values;
  int replications = 1;
  // run
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string format = "csv";

  /// Resolved ASMV count given the total fleet.
  int resolved_asmv_count(int default_total) const;
};

/// Parses a config tree; unknown keys and type errors raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
/// Accepts either a config or a run manifest (its embedded config is used).
ExperimentConfig load_config(const std::string& path);
/// Full config tree; parse_config(config_to_json(c)) reproduces `c`.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Everything built from a config: geometry, days, forecaster and fleets.
struct Experiment {
  RegionMap map;
  WorldConfig world;
  EngineOptions options;
  std::vector<DemandTensor> train_days, eval_days;
  DemandPredictor predictor;
  int traditional = 0;
  int asmvs = 0;
};

Experiment build_experiment(const ExperimentConfig& config);

/// Traditional deployment chosen by the configured scheduler.
std::vector<int> traditional_allocation(const Experiment& exp, const ExperimentConfig& config);

/// Named ASMV scheduler; `policy` is required for the smart family.
std::unique_ptr<AsmvScheduler> make_asmv_scheduler(const std::string& name, const Experiment& exp,
                                                   const PolicyBundle* policy, bool greedy, std::uint64_t seed);

struct EvalResult {
  std::vector<EpisodeTrace> traces;
  double mean_micro = 0.0;
  double mean_macro = 0.0;
};

/// Runs every day in `days` with the given deployment and scheduler.
EvalResult evaluate_days(const Experiment& exp, const std::vector<DemandTensor>& days, const std::vector<int>& s0_trad,
                         AsmvScheduler& scheduler, int asmv_count, double fault_rate, std::uint64_t seed);

TrainingWorld training_world(const Experiment& exp, const Engine& engine, const std::vector<int>& s0_trad,
                             int asmv_count, double fault_rate);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

/// Manifest recording the canonical config, its hash, the seed and the version.
nlohmann::json make_manifest(const nlohmann::json& config, std::uint64_t seed, const std::string& command);

const char* version_string();

}  // namespace fleetlab
