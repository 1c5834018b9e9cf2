// fleetlab: experiment harness for mixed traditional/autonomous micromobility fleets.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fleetlab/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fleetlab;

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out, format, regions, trad_sched, asmv_sched;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "experiment config (or a run manifest)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--format", f.format, "report format: csv or json");
  cmd->add_option("--regions", f.regions, "region centroid file (id,lat,lon)");
  cmd->add_option("--trad-sched", f.trad_sched, "sdsm | ga | file:<path>");
  cmd->add_option("--asmv-sched", f.asmv_sched, "none | iavs | mip | smart | smart-novrd | smart-novsr");
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c = f.config_path.empty() ? parse_config(json{{"schema_version", kConfigSchemaVersion}})
                                             : load_config(f.config_path);
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.format.empty()) c.format = f.format;
  if (!f.regions.empty()) c.regions_path = f.regions;
  if (!f.trad_sched.empty()) c.trad_sched = f.trad_sched;
  if (!f.asmv_sched.empty()) c.asmv_sched = f.asmv_sched;
  // Round-trip through the parser so flag values get the same validation.
  c = parse_config(config_to_json(c));
  const auto& a = c.asmv_sched;
  if (a != "none" && a != "iavs" && a != "mip" && a != "smart" && a != "smart-novrd" && a != "smart-novsr") {
    throw ConfigError("unknown ASMV scheduler: " + a);
  }
  const auto& t = c.trad_sched;
  if (t != "sdsm" && t != "ga" && t.rfind("file:", 0) != 0) throw ConfigError("unknown traditional scheduler: " + t);
  return c;
}

fs::path prepare_out(const ExperimentConfig& c, const std::string& command) {
  fs::path out(c.out_dir);
  fs::create_directories(out);
  std::ofstream(out / "manifest.json") << make_manifest(config_to_json(c), c.seed, command).dump(2) << "\n";
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dollars(std::int64_t cents) {
  char buf[64];
  const char* sign = cents < 0 ? "-" : "";
  const long long a = cents < 0 ? -static_cast<long long>(cents) : cents;
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", sign, a / 100, a % 100);
  return buf;
}

/// Writes `rows` (first row = header) as CSV or as a JSON array of objects.
void emit(std::ostream& out, const std::string& format, const std::vector<std::vector<std::string>>& rows) {
  if (format == "json") {
    json arr = json::array();
    for (std::size_t r = 1; r < rows.size(); ++r) {
      json obj;
      for (std::size_t k = 0; k < rows[0].size(); ++k) {
        const auto& cell = rows[r][k];
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (!cell.empty() && end && *end == '\0') {
          obj[rows[0][k]] = v;
        } else {
          obj[rows[0][k]] = cell;
        }
      }
      arr.push_back(obj);
    }
    out << arr.dump(2) << "\n";
    return;
  }
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
    out << "\n";
  }
}

void emit_file(const fs::path& path, const std::string& format, const std::vector<std::vector<std::string>>& rows) {
  std::ofstream f(path);
  emit(f, format, rows);
}

std::string ext(const std::string& format) { return format == "json" ? ".json" : ".csv"; }

bool is_smart(const std::string& name) { return name.rfind("smart", 0) == 0; }

PolicyBundle obtain_policy(const ExperimentConfig& c, const Experiment& exp, const std::vector<int>& s0,
                           std::uint64_t seed) {
  if (!c.policy_path.empty()) return load_policy(c.policy_path);
  Engine engine(exp.map, exp.world, exp.options);
  return train(training_world(exp, engine, s0, exp.asmvs, c.fault_rate), c.train, seed).policy;
}

int cmd_ingest(const ExperimentConfig& c) {
  if (c.trips_path.empty() || c.regions_path.empty()) {
    throw ConfigError("ingest needs demand.trips and world.regions");
  }
  const fs::path out = prepare_out(c, "ingest");
  const RegionMap map = load_regions_file(c.regions_path, c.neighbor_k);
  std::ifstream in(c.trips_path);
  if (!in) throw InputError("cannot open trips file " + c.trips_path);
  const auto parsed = parse_trips(in, map);
  const int t_count = c.intervals > 0 ? c.intervals : 24;
  fs::create_directories(out / "days");
  std::vector<DemandTensor> days;
  std::vector<std::vector<std::string>> rows{{"day", "trips", "file"}};
  for (auto d : trip_days(parsed.trips)) {
    std::vector<TripRecord> on_day;
    for (const auto& t : parsed.trips) {
      if (t.start_time.day() == d) on_day.push_back(t);
    }
    days.push_back(aggregate_demand(on_day, map, t_count, d));
    const std::string name = format_date(d) + ".csv";
    std::ofstream f(out / "days" / name);
    write_demand_trips(f, days.back());
    rows.push_back({format_date(d), std::to_string(days.back().total()), "days/" + name});
  }
  if (!days.empty()) {
    std::ofstream f(out / "predictor.csv");
    write_predictor(f, fit_predictor(days));
  }
  emit_file(out / ("ingest" + ext(c.format)), c.format, rows);
  emit(std::cout, c.format,
       {{"days", "trips", "skipped"},
        {std::to_string(days.size()), std::to_string(parsed.trips.size()), std::to_string(parsed.skipped)}});
  return 0;
}

int cmd_train(const ExperimentConfig& c) {
  const fs::path out = prepare_out(c, "train");
  const Experiment exp = build_experiment(c);
  const auto s0 = traditional_allocation(exp, c);
  Engine engine(exp.map, exp.world, exp.options);
  const PolicyBundle* resume = nullptr;
  PolicyBundle loaded;
  if (!c.policy_path.empty()) {
    loaded = load_policy(c.policy_path);
    resume = &loaded;
  }
  const auto result = train(training_world(exp, engine, s0, exp.asmvs, c.fault_rate), c.train, c.seed, resume);
  save_policy((out / "policy.bin").string(), result.policy);
  std::ofstream curve(out / "curve.csv");
  write_curve(curve, result.curve);
  double tail = 0.0;
  const std::size_t n = std::min<std::size_t>(100, result.curve.size());
  for (std::size_t k = result.curve.size() - n; k < result.curve.size(); ++k) tail += result.curve[k].d_rate;
  emit(std::cout, c.format,
       {{"episodes", "final_d_rate_mean", "policy"},
        {std::to_string(result.curve.size()), num(n ? tail / n : 0.0), (out / "policy.bin").string()}});
  return 0;
}

EvalResult run_eval(const ExperimentConfig& c, const Experiment& exp, const std::vector<int>& s0,
                    const std::string& sched, int k, double fault) {
  std::optional<PolicyBundle> policy;
  if (is_smart(sched)) policy = obtain_policy(c, exp, s0, c.seed);
  auto scheduler = make_asmv_scheduler(sched, exp, policy ? &*policy : nullptr, c.greedy, derive_seed(c.seed, 0xE7));
  return evaluate_days(exp, exp.eval_days, s0, *scheduler, k, fault, derive_seed(c.seed, 0xE8));
}

int cmd_evaluate(const ExperimentConfig& c) {
  const fs::path out = prepare_out(c, "evaluate");
  const Experiment exp = build_experiment(c);
  const auto s0 = traditional_allocation(exp, c);
  if (is_smart(c.asmv_sched) && c.policy_path.empty()) {
    throw ConfigError("evaluate with " + c.asmv_sched + " needs asmv.policy");
  }
  const auto result = run_eval(c, exp, s0, c.asmv_sched, exp.asmvs, c.fault_rate);
  std::vector<std::vector<std::string>> rows{{"day", "micro", "macro", "demand", "served"}};
  std::ofstream traces(out / "traces.jsonl");
  for (std::size_t d = 0; d < result.traces.size(); ++d) {
    const auto& t = result.traces[d];
    rows.push_back({std::to_string(d), num(satisfaction_rate(t, SatMode::Micro)),
                    num(satisfaction_rate(t, SatMode::Macro)), std::to_string(t.demand), std::to_string(t.served)});
    write_trace(traces, t);
  }
  emit_file(out / ("eval" + ext(c.format)), c.format, rows);
  emit(std::cout, c.format,
       {{"trad_sched", "asmv_sched", "asmvs", "days", "mean_micro", "mean_macro"},
        {c.trad_sched, c.asmv_sched, std::to_string(exp.asmvs), std::to_string(result.traces.size()),
         num(result.mean_micro), num(result.mean_macro)}});
  return 0;
}

int cmd_sweep(const ExperimentConfig& c) {
  const fs::path out = prepare_out(c, "sweep");
  if (c.sweep_values.empty()) throw ConfigError("sweep.values is empty");
  std::vector<SweepRow> rows;
  for (double value : c.sweep_values) {
    std::vector<double> samples;
    for (int r = 0; r < c.replications; ++r) {
      ExperimentConfig rc = c;
      rc.seed = derive_seed(c.seed, static_cast<std::uint64_t>(r));
      if (c.sweep_axis == "ratio") {
        rc.asmv_count.reset();
        rc.asmv_ratio = value;
        if (!rc.fleet_total && !rc.traditional) {
          const auto probe = build_experiment(c);
          rc.fleet_total = probe.traditional + probe.asmvs;
        }
      } else if (c.sweep_axis == "fault") {
        if (!(value >= 0.0 && value <= 0.5)) throw ConfigError("fault sweep values must lie in [0, 0.5]");
        rc.fault_rate = value;
      } else {
        rc.background = value != 0.0;
      }
      const Experiment exp = build_experiment(rc);
      const auto s0 = traditional_allocation(exp, rc);
      samples.push_back(run_eval(rc, exp, s0, rc.asmv_sched, exp.asmvs, rc.fault_rate).mean_micro);
    }
    rows.push_back(summarize(c.sweep_axis, value, samples));
  }
  sort_rows(rows);
  std::ofstream f(out / ("sweep" + ext(c.format)));
  if (c.format == "json") {
    write_sweep_json(f, rows);
    write_sweep_json(std::cout, rows);
  } else {
    write_sweep_csv(f, rows);
    write_sweep_csv(std::cout, rows);
  }
  return 0;
}

int cmd_econ(const ExperimentConfig& c) {
  const fs::path out = prepare_out(c, "econ");
  const Experiment exp = build_experiment(c);
  const auto s0 = traditional_allocation(exp, c);
  const auto result = run_eval(c, exp, s0, c.asmv_sched, exp.asmvs, c.fault_rate);
  const auto ledger = net_revenue(result.traces, exp.asmvs, RevenueScope::AsmvTrips);
  std::vector<std::vector<std::string>> rows{
      {"day", "trip_revenue", "charging_cost", "deployment_cost", "net", "cumulative_net"}};
  for (const auto& r : ledger.rows) {
    rows.push_back({std::to_string(r.day), dollars(r.trip_revenue), dollars(r.charging_cost),
                    dollars(r.deployment_cost), dollars(r.net), dollars(r.cumulative_net)});
  }
  emit_file(out / ("ledger" + ext(c.format)), c.format, rows);
  emit(std::cout, c.format,
       {{"trip_revenue", "charging_cost", "deployment_cost", "net", "break_even_day"},
        {dollars(ledger.trip_revenue), dollars(ledger.charging_cost), dollars(ledger.deployment_cost),
         dollars(ledger.net), ledger.break_even_day ? std::to_string(*ledger.break_even_day) : ""}});
  return 0;
}

int cmd_report(const ExperimentConfig& c) {
  const fs::path out = prepare_out(c, "report");
  const Experiment exp = build_experiment(c);
  const auto s0 = traditional_allocation(exp, c);
  const auto baseline = run_eval(c, exp, s0, "none", 0, 0.0);
  std::vector<DayCounts> days;
  for (const auto& t : baseline.traces) days.push_back(day_counts(t));
  const auto [low, other] = split_by_performance(days);

  std::vector<std::vector<std::string>> rows{{"section", "key", "value"}};
  rows.push_back({"split", "low_days", std::to_string(low.size())});
  rows.push_back({"split", "other_days", std::to_string(other.size())});
  if (!low.empty() && !other.empty()) {
    const auto diff = diff_report(low, other);
    rows.push_back({"diff", "total_increase_pct", num(diff.total_increase_pct)});
    for (std::size_t i = 0; i < diff.per_region.size(); ++i) {
      rows.push_back({"diff_region", std::to_string(i), num(diff.per_region[i])});
    }
    for (std::size_t t = 0; t < diff.per_hour.size(); ++t) {
      rows.push_back({"diff_hour", std::to_string(t), num(diff.per_hour[t])});
    }
  }

  const auto with = run_eval(c, exp, s0, c.asmv_sched, exp.asmvs, c.fault_rate);
  const auto per_region = [&](const EvalResult& r) {
    std::vector<double> v(exp.map.size(), 0.0);
    for (const auto& t : r.traces) {
      for (const auto& s : t.steps) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += s.outcome.satisfied[i];
      }
    }
    for (double& x : v) x /= static_cast<double>(r.traces.size());
    return v;
  };
  const auto a = per_region(baseline), b = per_region(with);
  const auto ks = ks_two_sample(a, b);
  rows.push_back({"ks", "statistic", num(ks.statistic)});
  rows.push_back({"ks", "p_value", num(ks.p_value)});
  emit_file(out / ("report" + ext(c.format)), c.format, rows);
  emit(std::cout, c.format, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fleetlab: simulate, train and evaluate mixed micromobility fleets"};
  app.set_version_flag("--version", std::string(version_string()));
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"ingest", "trip records -> per-day demand tensors and a predictor"},
      {"train", "train the hierarchical policy; writes a checkpoint and learning curves"},
      {"evaluate", "run the evaluation days and report satisfaction"},
      {"sweep", "ASMV ratio, fault-rate or background-demand grids"},
      {"econ", "net revenue ledger"},
      {"report", "low-performance-day differences and KS test"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config-error: " << e.what() << "\n";
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const ExperimentConfig c = resolve(flags);
    if (cmd == "ingest") return cmd_ingest(c);
    if (cmd == "train") return cmd_train(c);
    if (cmd == "evaluate") return cmd_evaluate(c);
    if (cmd == "sweep") return cmd_sweep(c);
    if (cmd == "econ") return cmd_econ(c);
    return cmd_report(c);
  } catch (const ConfigError& e) {
    std::cerr << "config-error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
