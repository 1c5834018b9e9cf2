#include "fleetlab/sched_trad.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace fleetlab {

std::vector<int> sdsm_allocate(const TradScheduleRequest& request, const std::vector<double>& historical_origin_demand) {
  if (historical_origin_demand.size() != request.s_pre_trad.size()) {
    throw InputError("historical demand must have one entry per region");
  }
  for (double d : historical_origin_demand) {
    if (!(d >= 0.0)) throw InputError("historical demand must be nonnegative");
  }
  return largest_remainder(historical_origin_demand, request.fleet_total);
}

double trad_only_fitness(const GaFitnessEnv& env, const std::vector<int>& allocation) {
  const Engine& engine = *env.engine;
  FleetState state = engine.reset(allocation, env.demand, 0, 0.0, env.seed);
  state = engine.deploy_traditional(std::move(state), allocation);
  const std::vector<std::size_t> no_actions;
  while (state.interval < state.intervals) state = engine.step(std::move(state), env.demand, no_actions).state;
  return satisfaction_ratio(state.served_so_far, state.demand_so_far);
}

namespace {

using Chromosome = std::vector<int>;

Chromosome random_allocation(std::size_t regions, int total, Rng& rng) {
  Chromosome c(regions, 0);
  for (int k = 0; k < total; ++k) ++c[uniform_index(rng, regions)];
  return c;
}

Chromosome blend(const Chromosome& a, const Chromosome& b, int total, Rng& rng) {
  std::vector<double> mix(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double alpha = uniform01(rng);
    mix[i] = alpha * a[i] + (1.0 - alpha) * b[i];
  }
  return largest_remainder(mix, total);
}

void mutate(Chromosome& c, Rng& rng) {
  if (c.size() < 2) return;
  std::vector<std::size_t> donors;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] > 0) donors.push_back(i);
  }
  if (donors.empty()) return;
  const std::size_t from = donors[uniform_index(rng, donors.size())];
  std::size_t to = uniform_index(rng, c.size() - 1);
  if (to >= from) ++to;
  --c[from];
  ++c[to];
}

}  // namespace

GaResult ga_allocate(const TradScheduleRequest& request, const GaFitnessEnv& env, const GaParams& params) {
  if (params.population < 2) throw InputError("GA population must be at least 2");
  if (params.generations < 1) throw InputError("GA needs at least one generation");
  if (!env.engine) throw InputError("GA fitness environment has no engine");
  const std::size_t n = request.s_pre_trad.size();
  const int total = request.fleet_total;
  Rng rng(params.seed);

  std::map<Chromosome, double> cache;
  const auto fitness = [&](const Chromosome& c) {
    const auto it = cache.find(c);
    if (it != cache.end()) return it->second;
    const double f = trad_only_fitness(env, c);
    cache.emplace(c, f);
    return f;
  };

  std::vector<Chromosome> pop;
  for (const auto& c : params.initial) {
    if (c.size() != n || std::accumulate(c.begin(), c.end(), 0) != total) {
      throw InputError("seed chromosome does not match the fleet");
    }
    if (static_cast<int>(pop.size()) < params.population) pop.push_back(c);
  }
  while (static_cast<int>(pop.size()) < params.population) pop.push_back(random_allocation(n, total, rng));

  struct Scored {
    Chromosome genes;
    double fit;
  };
  const auto rank = [&](std::vector<Chromosome>& p) {
    std::vector<Scored> s;
    s.reserve(p.size());
    for (auto& c : p) {
      const double f = fitness(c);
      s.push_back({std::move(c), f});
    }
    std::sort(s.begin(), s.end(), [](const Scored& a, const Scored& b) {
      return a.fit != b.fit ? a.fit > b.fit : a.genes < b.genes;
    });
    return s;
  };

  GaResult result;
  auto scored = rank(pop);
  result.best_per_generation.push_back(scored.front().fit);

  const auto tournament = [&](const std::vector<Scored>& s) -> const Chromosome& {
    const auto a = uniform_index(rng, s.size());
    const auto b = uniform_index(rng, s.size());
    return s[std::min(a, b)].genes;  // sorted best-first
  };

  for (int g = 0; g < params.generations; ++g) {
    std::vector<Chromosome> next;
    const int elite = std::clamp(params.elitism, 0, params.population);
    for (int e = 0; e < elite; ++e) next.push_back(scored[static_cast<std::size_t>(e)].genes);
    while (static_cast<int>(next.size()) < params.population) {
      Chromosome child = blend(tournament(scored), tournament(scored), total, rng);
      if (uniform01(rng) < params.mutation_rate) mutate(child, rng);
      next.push_back(std::move(child));
    }
    scored = rank(next);
    result.best_per_generation.push_back(scored.front().fit);
  }
  result.best = scored.front().genes;
  result.best_fitness = scored.front().fit;
  return result;
}

std::vector<int> GaScheduler::allocate(const TradScheduleRequest& request) {
  if (cached_fleet_ != request.fleet_total) {
    result_ = ga_allocate(request, env_, params_);
    cached_fleet_ = request.fleet_total;
  }
  return result_.best;
}

std::vector<int> read_allocation(std::istream& in) {
  std::map<std::size_t, int> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    long long region = 0, count = 0;
    char comma = 0;
    std::istringstream f(line);
    if (!(f >> region >> comma >> count) || comma != ',') {
      if (line_no == 1) continue;  // header
      throw InputError("allocation line " + std::to_string(line_no) + ": expected region,count");
    }
    if (region < 0 || count < 0) throw InputError("allocation entries must be nonnegative");
    rows[static_cast<std::size_t>(region)] += static_cast<int>(count);
  }
  std::vector<int> out(rows.empty() ? 0 : rows.rbegin()->first + 1, 0);
  for (const auto& [r, c] : rows) out[r] = c;
  return out;
}

FileTradScheduler::FileTradScheduler(const std::string& path) : label_(path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open allocation file " + path);
  allocation_ = read_allocation(in);
}

std::vector<int> FileTradScheduler::allocate(const TradScheduleRequest& request) {
  std::vector<int> out = allocation_;
  if (out.size() > request.s_pre_trad.size()) throw InputError("allocation file names unknown regions");
  out.resize(request.s_pre_trad.size(), 0);
  if (std::accumulate(out.begin(), out.end(), 0) != request.fleet_total) {
    throw InputError("allocation file does not sum to the fleet size");
  }
  return out;
}

}  // namespace fleetlab
