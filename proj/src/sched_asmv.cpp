#include "fleetlab/sched_asmv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fleetlab {

std::vector<int> uniform_deployment(std::size_t regions, int vehicles) {
  return largest_remainder(std::vector<double>(regions, 1.0), vehicles);
}

std::size_t iavs_decide(const LowLevelObservation& obs, const RegionMap& map, std::size_t k) {
  for (std::size_t r : neighbors(map, obs.own_location, k)) {
    if (obs.feasible[r] && obs.trad_counts[r] + obs.auto_counts[r] == 0) return r;
  }
  return obs.own_location;
}

namespace {

struct MipInstance {
  std::vector<double> demand;             // predicted origin demand per region
  std::vector<int> base;                  // supply excluding the deciding vehicles
  std::vector<std::vector<std::size_t>> options;  // per vehicle: own region first, then ascending
};

MipInstance mip_instance(const std::vector<LowLevelObservation>& obs, const RealTensor& predicted_next) {
  MipInstance m;
  const std::size_t n = predicted_next.regions;
  m.demand.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.demand[i] = predicted_next.origin(0, i);
  if (obs.empty()) return m;
  m.base.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) m.base[i] = obs.front().trad_counts[i] + obs.front().auto_counts[i];
  for (const auto& o : obs) {
    --m.base[o.own_location];
    std::vector<std::size_t> opts{o.own_location};
    for (std::size_t r = 0; r < n; ++r) {
      if (r != o.own_location && o.feasible[r]) opts.push_back(r);
    }
    m.options.push_back(std::move(opts));
  }
  return m;
}

double gain(const MipInstance& m, const std::vector<int>& supply, std::size_t r) {
  const double s = supply[r];
  return std::min(s + 1.0, m.demand[r]) - std::min(s, m.demand[r]);
}

double objective_of(const MipInstance& m, const std::vector<int>& supply) {
  double total = 0.0;
  for (std::size_t i = 0; i < supply.size(); ++i) total += std::min(static_cast<double>(supply[i]), m.demand[i]);
  return total;
}

constexpr double kTol = 1e-12;

struct Search {
  const MipInstance& m;
  std::vector<int> supply;
  std::vector<std::size_t> pick, best_pick;
  double best = -1.0;

  void run(std::size_t k, double value) {
    if (k == m.options.size()) {
      if (value > best + kTol) {
        best = value;
        best_pick = pick;
      }
      return;
    }
    double deficit = 0.0;
    for (std::size_t i = 0; i < supply.size(); ++i) deficit += std::max(0.0, m.demand[i] - supply[i]);
    const double remaining = static_cast<double>(m.options.size() - k);
    if (value + std::min(remaining, deficit) <= best + kTol) return;
    for (std::size_t r : m.options[k]) {
      const double g = gain(m, supply, r);
      ++supply[r];
      pick[k] = r;
      run(k + 1, value + g);
      --supply[r];
    }
  }
};

}  // namespace

double mip_objective(const std::vector<LowLevelObservation>& obs, const RealTensor& predicted_next,
                     const std::vector<std::size_t>& targets) {
  const auto m = mip_instance(obs, predicted_next);
  if (obs.empty()) return 0.0;
  std::vector<int> supply = m.base;
  for (auto t : targets) ++supply[t];
  return objective_of(m, supply);
}

MipResult mip_rebalance(const std::vector<LowLevelObservation>& obs, const RealTensor& predicted_next) {
  MipResult result;
  result.solver = "branch-and-bound";
  if (obs.empty()) return result;
  const auto m = mip_instance(obs, predicted_next);

  double leaves = 1.0;
  for (const auto& o : m.options) leaves *= static_cast<double>(o.size());

  if (leaves <= kMipExactLimit) {
    Search s{m, m.base, std::vector<std::size_t>(obs.size()), {}, -1.0};
    s.run(0, objective_of(m, m.base));
    result.targets = s.best_pick;
    result.objective = s.best;
    return result;
  }

  result.solver = "greedy";
  std::vector<int> supply = m.base;
  for (const auto& opts : m.options) {
    std::size_t choice = opts.front();
    double best = gain(m, supply, choice);
    for (std::size_t r : opts) {
      const double g = gain(m, supply, r);
      if (g > best + kTol) {
        best = g;
        choice = r;
      }
    }
    ++supply[choice];
    result.targets.push_back(choice);
  }
  result.objective = objective_of(m, supply);
  return result;
}

namespace {

std::size_t draw(const std::vector<double>& log_probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t r = 0; r < log_probs.size(); ++r) {
    if (std::isinf(log_probs[r])) continue;
    acc += std::exp(log_probs[r]);
    last = r;
    if (u < acc) return r;
  }
  return last;
}

}  // namespace

HighAction smart_high_act(const HighLevelObservation& obs, const PolicyBundle& policy, int vehicles, ActMode mode,
                          Rng& rng) {
  const auto logits = policy.high_policy.forward(encode_high(policy, obs));
  const auto lp = masked_log_softmax(logits, {});
  HighAction a;
  if (mode == ActMode::Greedy) {
    std::vector<double> p(lp.size());
    for (std::size_t r = 0; r < lp.size(); ++r) p[r] = std::exp(lp[r]);
    a.counts = largest_remainder(p, vehicles);
  } else {
    a.counts.assign(lp.size(), 0);
    for (int k = 0; k < vehicles; ++k) ++a.counts[draw(lp, rng)];
  }
  a.log_prob = categorical_log_prob(logits, {}, a.counts);
  return a;
}

LowAction smart_low_act(const LowLevelObservation& obs, const PolicyBundle& policy, ActMode mode, Rng& rng) {
  const auto logits = policy.low_policy.forward(encode_low(policy, obs));
  const auto lp = masked_log_softmax(logits, obs.feasible);
  LowAction a;
  if (mode == ActMode::Greedy) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < lp.size(); ++r) {
      if (obs.feasible[r] && lp[r] > best) {
        best = lp[r];
        a.target = r;
      }
    }
  } else {
    a.target = draw(lp, rng);
  }
  a.log_prob = lp[a.target];
  return a;
}

std::vector<std::size_t> StayScheduler::rebalance(const std::vector<LowLevelObservation>& obs) {
  std::vector<std::size_t> out;
  for (const auto& o : obs) out.push_back(o.own_location);
  return out;
}

std::vector<std::size_t> IavsScheduler::rebalance(const std::vector<LowLevelObservation>& obs) {
  std::vector<std::size_t> out;
  for (const auto& o : obs) out.push_back(iavs_decide(o, *map_, k_));
  return out;
}

std::vector<std::size_t> MipScheduler::rebalance(const std::vector<LowLevelObservation>& obs) {
  if (obs.empty()) return {};
  auto result = mip_rebalance(obs, obs.front().predicted_next);
  solver_log_.push_back(result.solver);
  return std::move(result.targets);
}

std::string SmartScheduler::name() const {
  switch (variant_) {
    case SmartVariant::NoDeployment: return "smart-novrd";
    case SmartVariant::NoRebalancing: return "smart-novsr";
    default: return "smart";
  }
}

std::vector<int> SmartScheduler::deploy(const HighLevelObservation& obs, int vehicles) {
  if (variant_ == SmartVariant::NoDeployment) return uniform_deployment(policy_.regions, vehicles);
  return smart_high_act(obs, policy_, vehicles, mode_, rng_).counts;
}

std::vector<std::size_t> SmartScheduler::rebalance(const std::vector<LowLevelObservation>& obs) {
  std::vector<std::size_t> out;
  for (const auto& o : obs) {
    out.push_back(variant_ == SmartVariant::NoRebalancing ? o.own_location
                                                          : smart_low_act(o, policy_, mode_, rng_).target);
  }
  return out;
}

}  // namespace fleetlab
