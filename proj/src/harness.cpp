#include "fleetlab/harness.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace fleetlab {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ConfigError("unknown key " + where + "." + k);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for ") + key);
  }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  T v{};
  read(j, key, v);
  out = v;
}

}  // namespace

int ExperimentConfig::resolved_asmv_count(int default_total) const {
  if (asmv_count) return *asmv_count;
  if (asmv_ratio) return static_cast<int>(std::lround(*asmv_ratio * (fleet_total ? *fleet_total : default_total)));
  return -1;
}

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "config", {"schema_version", "seed", "out", "format", "world", "demand", "fleet", "trad", "asmv",
                           "train", "sweep"});
  if (!j.contains("schema_version")) throw ConfigError("missing schema_version");
  if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version");
  }
  ExperimentConfig c;
  read(j, "seed", c.seed);
  read(j, "out", c.out_dir);
  read(j, "format", c.format);

  if (j.contains("world")) {
    const auto& w = j.at("world");
    check_keys(w, "world", {"regions", "scenario", "intervals", "neighbor_k", "move_range_miles", "service_neighbors"});
    read(w, "regions", c.regions_path);
    read(w, "scenario", c.scenario);
    read(w, "intervals", c.intervals);
    read(w, "neighbor_k", c.neighbor_k);
    read(w, "move_range_miles", c.move_range_miles);
    read(w, "service_neighbors", c.service_neighbors);
  }
  if (j.contains("demand")) {
    const auto& d = j.at("demand");
    check_keys(d, "demand", {"trips", "tensors", "synthetic_days", "train_days", "eval_days", "background"});
    read(d, "trips", c.trips_path);
    read(d, "tensors", c.tensor_paths);
    read(d, "synthetic_days", c.synthetic_days);
    read(d, "train_days", c.train_days);
    read(d, "eval_days", c.eval_days);
    read(d, "background", c.background);
  }
  const int sources = !c.trips_path.empty() + !c.tensor_paths.empty() + (c.synthetic_days > 0);
  if (sources == 0) c.synthetic_days = 60;
  if (sources > 1) throw ConfigError("demand must name exactly one source");

  if (j.contains("fleet")) {
    const auto& f = j.at("fleet");
    check_keys(f, "fleet", {"traditional", "total", "asmv_count", "asmv_ratio", "fault_rate"});
    read(f, "traditional", c.traditional);
    read(f, "total", c.fleet_total);
    read(f, "asmv_count", c.asmv_count);
    read(f, "asmv_ratio", c.asmv_ratio);
    read(f, "fault_rate", c.fault_rate);
  }
  if (c.asmv_count && c.asmv_ratio) throw ConfigError("asmv_count and asmv_ratio are mutually exclusive");
  if (c.traditional && c.fleet_total) throw ConfigError("traditional and total are mutually exclusive");
  if (c.asmv_ratio && !(*c.asmv_ratio >= 0.0 && *c.asmv_ratio <= 1.0)) throw ConfigError("asmv_ratio must lie in [0, 1]");
  if (c.asmv_count && *c.asmv_count < 0) throw ConfigError("asmv_count must be nonnegative");
  if (!(c.fault_rate >= 0.0 && c.fault_rate <= 0.5)) throw ConfigError("fault_rate must lie in [0, 0.5]");

  if (j.contains("trad")) {
    const auto& t = j.at("trad");
    check_keys(t, "trad", {"scheduler", "ga"});
    read(t, "scheduler", c.trad_sched);
    if (t.contains("ga")) {
      const auto& g = t.at("ga");
      check_keys(g, "trad.ga", {"population", "generations", "mutation_rate", "elitism"});
      read(g, "population", c.ga.population);
      read(g, "generations", c.ga.generations);
      read(g, "mutation_rate", c.ga.mutation_rate);
      read(g, "elitism", c.ga.elitism);
    }
  }
  if (j.contains("asmv")) {
    const auto& a = j.at("asmv");
    check_keys(a, "asmv", {"scheduler", "policy", "mode"});
    read(a, "scheduler", c.asmv_sched);
    read(a, "policy", c.policy_path);
    std::string mode = "greedy";
    read(a, "mode", mode);
    if (mode != "greedy" && mode != "sample") throw ConfigError("asmv.mode must be greedy or sample");
    c.greedy = mode == "greedy";
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, "train", {"episodes", "n_freq", "lr_high", "lr_low", "clip", "gamma", "lambda", "minibatch",
                            "hidden", "horizon", "normalize_advantages"});
    read(t, "episodes", c.train.episodes);
    read(t, "n_freq", c.train.n_freq);
    read(t, "lr_high", c.train.lr_high);
    read(t, "lr_low", c.train.lr_low);
    read(t, "clip", c.train.clip);
    read(t, "gamma", c.train.gamma);
    read(t, "lambda", c.train.lambda);
    read(t, "minibatch", c.train.minibatch);
    read(t, "hidden", c.train.hidden);
    read(t, "horizon", c.train.horizon);
    read(t, "normalize_advantages", c.train.normalize_advantages);
    try {
      c.train.validate();
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    check_keys(s, "sweep", {"axis", "values", "replications"});
    read(s, "axis", c.sweep_axis);
    read(s, "values", c.sweep_values);
    read(s, "replications", c.replications);
    if (c.sweep_axis != "ratio" && c.sweep_axis != "fault" && c.sweep_axis != "background") {
      throw ConfigError("sweep.axis must be ratio, fault or background");
    }
    if (c.replications < 1) throw ConfigError("sweep.replications must be at least 1");
  }
  if (c.format != "csv" && c.format != "json") throw ConfigError("format must be csv or json");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("config_hash")) return parse_config(j.at("config"));
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
  json world = {{"scenario", c.scenario}, {"intervals", c.intervals}, {"neighbor_k", c.neighbor_k},
                {"move_range_miles", c.move_range_miles}, {"service_neighbors", c.service_neighbors}};
  if (!c.regions_path.empty()) world["regions"] = c.regions_path;
  json demand = {{"train_days", c.train_days}, {"eval_days", c.eval_days}, {"background", c.background}};
  if (!c.trips_path.empty()) {
    demand["trips"] = c.trips_path;
  } else if (!c.tensor_paths.empty()) {
    demand["tensors"] = c.tensor_paths;
  } else {
    demand["synthetic_days"] = c.synthetic_days;
  }
  json fleet = {{"fault_rate", c.fault_rate}};
  if (c.traditional) fleet["traditional"] = *c.traditional;
  if (c.fleet_total) fleet["total"] = *c.fleet_total;
  if (c.asmv_count) fleet["asmv_count"] = *c.asmv_count;
  if (c.asmv_ratio) fleet["asmv_ratio"] = *c.asmv_ratio;
  json asmv = {{"scheduler", c.asmv_sched}, {"mode", c.greedy ? "greedy" : "sample"}};
  if (!c.policy_path.empty()) asmv["policy"] = c.policy_path;
  const auto& t = c.train;
  return {{"schema_version", kConfigSchemaVersion},
          {"seed", c.seed},
          {"out", c.out_dir},
          {"format", c.format},
          {"world", world},
          {"demand", demand},
          {"fleet", fleet},
          {"trad",
           {{"scheduler", c.trad_sched},
            {"ga",
             {{"population", c.ga.population},
              {"generations", c.ga.generations},
              {"mutation_rate", c.ga.mutation_rate},
              {"elitism", c.ga.elitism}}}}},
          {"asmv", asmv},
          {"train",
           {{"episodes", t.episodes},
            {"n_freq", t.n_freq},
            {"lr_high", t.lr_high},
            {"lr_low", t.lr_low},
            {"clip", t.clip},
            {"gamma", t.gamma},
            {"lambda", t.lambda},
            {"minibatch", t.minibatch},
            {"hidden", t.hidden},
            {"horizon", t.horizon},
            {"normalize_advantages", t.normalize_advantages}}},
          {"sweep", {{"axis", c.sweep_axis}, {"values", c.sweep_values}, {"replications", c.replications}}}};
}

Experiment build_experiment(const ExperimentConfig& config) {
  Experiment exp;
  std::optional<Scenario> scenario;
  if (config.regions_path.empty()) {
    scenario = scenario_by_name(config.scenario);
    exp.map = scenario->map;
    exp.world = scenario->world;
    exp.options = scenario->engine;
  } else {
    exp.map = load_regions_file(config.regions_path, config.neighbor_k);
  }
  if (config.intervals > 0) exp.world.intervals_per_day = config.intervals;
  exp.world.seed = config.seed;
  exp.world.validate();
  exp.options.move_range_miles = config.move_range_miles;
  exp.options.service_neighbors = config.service_neighbors;
  const int t_count = exp.world.intervals_per_day;

  std::vector<DemandTensor> days;
  if (config.synthetic_days > 0) {
    if (!scenario) throw ConfigError("synthetic demand needs a scenario preset, not a regions file");
    Scenario sc = *scenario;
    sc.world.intervals_per_day = t_count;
    days = scenario_days(sc, config.synthetic_days, derive_seed(config.seed, 0xDA75));
  } else if (!config.trips_path.empty()) {
    std::ifstream in(config.trips_path);
    if (!in) throw InputError("cannot open trips file " + config.trips_path);
    const auto parsed = parse_trips(in, exp.map);
    for (auto d : trip_days(parsed.trips)) {
      std::vector<TripRecord> on_day;
      for (const auto& t : parsed.trips) {
        if (t.start_time.day() == d) on_day.push_back(t);
      }
      days.push_back(aggregate_demand(on_day, exp.map, t_count, d));
    }
  } else {
    for (const auto& p : config.tensor_paths) {
      std::ifstream in(p);
      if (!in) throw InputError("cannot open demand file " + p);
      days.push_back(read_demand_trips(in));
      if (days.back().intervals() != t_count || days.back().regions() != exp.map.size()) {
        throw InputError("demand file " + p + " does not match the world dimensions");
      }
    }
  }
  if (days.size() < 2) throw InputError("need at least two days of demand");

  const std::size_t split =
      config.train_days > 0 ? static_cast<std::size_t>(config.train_days) : days.size() / 2;
  if (split >= days.size()) throw ConfigError("train_days leaves no evaluation days");
  exp.train_days.assign(days.begin(), days.begin() + static_cast<std::ptrdiff_t>(split));
  exp.eval_days.assign(days.begin() + static_cast<std::ptrdiff_t>(split), days.end());
  if (config.eval_days > 0 && static_cast<std::size_t>(config.eval_days) < exp.eval_days.size()) {
    exp.eval_days.resize(static_cast<std::size_t>(config.eval_days));
  }

  if (config.background) {
    const auto history = exp.train_days;
    const auto augment = [&](std::vector<DemandTensor>& set, std::uint64_t tag) {
      for (std::size_t d = 0; d < set.size(); ++d) {
        set[d] = estimate_background_demand(set[d], cumulative_net_inflow(set[d]), history,
                                            derive_seed(config.seed, tag + d))
                     .tensor;
      }
    };
    augment(exp.train_days, 0xB6000);
    augment(exp.eval_days, 0xB7000);
  }
  exp.predictor = fit_predictor(exp.train_days);

  int default_trad = scenario ? scenario->traditional : 0;
  int default_k = scenario ? scenario->asmvs : 0;
  const int total = config.fleet_total ? *config.fleet_total : default_trad + default_k;
  int k = config.resolved_asmv_count(total);
  if (k < 0) k = default_k;
  if (config.traditional) {
    exp.traditional = *config.traditional;
  } else if (config.fleet_total) {
    exp.traditional = *config.fleet_total - k;
  } else if (config.asmv_ratio) {
    exp.traditional = total - k;
  } else {
    exp.traditional = default_trad;
  }
  exp.asmvs = k;
  if (exp.traditional < 0) throw ConfigError("ASMV count exceeds the fleet");
  if (exp.traditional == 0 && exp.asmvs == 0) throw ConfigError("fleet is empty");
  return exp;
}

std::vector<int> traditional_allocation(const Experiment& exp, const ExperimentConfig& config) {
  TradScheduleRequest req{std::vector<int>(exp.map.size(), 0), exp.predictor.predict(0, exp.world.intervals_per_day),
                          exp.traditional};
  const auto historical = daily_origin_demand(exp.predictor);
  const auto& name = config.trad_sched;
  if (name == "sdsm") return SdsmScheduler(historical).allocate(req);
  if (name == "ga") {
    Engine engine(exp.map, exp.world, exp.options);
    GaParams params = config.ga;
    params.seed = derive_seed(config.seed, 0x6A);
    params.initial = {sdsm_allocate(req, historical)};
    GaScheduler ga({&engine, materialize_expected_day(exp.predictor, exp.train_days), derive_seed(config.seed, 0x6B)},
                   params);
    return ga.allocate(req);
  }
  if (name.rfind("file:", 0) == 0) return FileTradScheduler(name.substr(5)).allocate(req);
  throw ConfigError("unknown traditional scheduler: " + name);
}

std::unique_ptr<AsmvScheduler> make_asmv_scheduler(const std::string& name, const Experiment& exp,
                                                   const PolicyBundle* policy, bool greedy, std::uint64_t seed) {
  if (name == "none") return std::make_unique<StayScheduler>(exp.map.size());
  if (name == "iavs") return std::make_unique<IavsScheduler>(exp.map, exp.map.neighbor_k());
  if (name == "mip") return std::make_unique<MipScheduler>(exp.map.size());
  const ActMode mode = greedy ? ActMode::Greedy : ActMode::Sample;
  SmartVariant variant;
  if (name == "smart") {
    variant = SmartVariant::Full;
  } else if (name == "smart-novrd") {
    variant = SmartVariant::NoDeployment;
  } else if (name == "smart-novsr") {
    variant = SmartVariant::NoRebalancing;
  } else {
    throw ConfigError("unknown ASMV scheduler: " + name);
  }
  if (!policy) throw ConfigError("scheduler " + name + " needs a policy");
  return std::make_unique<SmartScheduler>(*policy, variant, mode, seed);
}

EvalResult evaluate_days(const Experiment& exp, const std::vector<DemandTensor>& days, const std::vector<int>& s0_trad,
                         AsmvScheduler& scheduler, int asmv_count, double fault_rate, std::uint64_t seed) {
  Engine engine(exp.map, exp.world, exp.options);
  FileTradScheduler fixed(s0_trad, "fixed");
  EvalResult result;
  int horizon = exp.world.intervals_per_day;
  if (const auto* smart = dynamic_cast<const SmartScheduler*>(&scheduler)) horizon = smart->policy().horizon;
  for (std::size_t d = 0; d < days.size(); ++d) {
    FleetState state = engine.reset(s0_trad, days[d], asmv_count, fault_rate, derive_seed(seed, d));
    auto trace = run_episode(engine, std::move(state), days[d], fixed, scheduler, exp.predictor, {horizon});
    result.mean_micro += satisfaction_rate(trace, SatMode::Micro);
    result.mean_macro += satisfaction_rate(trace, SatMode::Macro);
    result.traces.push_back(std::move(trace));
  }
  if (!days.empty()) {
    result.mean_micro /= static_cast<double>(days.size());
    result.mean_macro /= static_cast<double>(days.size());
  }
  return result;
}

TrainingWorld training_world(const Experiment& exp, const Engine& engine, const std::vector<int>& s0_trad,
                             int asmv_count, double fault_rate) {
  TrainingWorld w;
  w.engine = &engine;
  w.forecaster = &exp.predictor;
  w.days = exp.train_days;
  w.s0_trad = s0_trad;
  w.asmv_count = asmv_count;
  w.fault_rate = fault_rate;
  return w;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const char* version_string() { return FLEETLAB_VERSION; }

json make_manifest(const json& config, std::uint64_t seed, const std::string& command) {
  const std::string canonical = config.dump();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
  return {{"command", command}, {"config", config}, {"config_hash", hash}, {"seed", seed},
          {"version", version_string()}};
}

}  // namespace fleetlab
