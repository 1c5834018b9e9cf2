#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fleetlab/policy.hpp"
#include "fleetlab/scheduler.hpp"
#include "fleetlab/world.hpp"

namespace fleetlab {

/// Equal split of `vehicles` over the regions (largest remainder).
std::vector<int> uniform_deployment(std::size_t regions, int vehicles);

/// Nearest of the k nearest neighbors holding no vehicle of either fleet and
/// reachable this interval; otherwise the own region.
std::size_t iavs_decide(const LowLevelObservation& obs, const RegionMap& map, std::size_t k = 8);

struct MipResult {
  std::vector<std::size_t> targets;  // one per observation
  double objective = 0.0;            // sum_i min(supply_i, predicted origin demand_i)
  std::string solver;                // "branch-and-bound" or "greedy"
};

/// Above this many complete assignments the greedy solver is used.
inline constexpr double kMipExactLimit = 1e6;

/// Next-interval assignment maximizing expected satisfied demand. Supply is
/// the census of both fleets after the moves. Exact search keeps the first
/// optimum in the order "stay, then ascending region", so it only moves when
/// a move strictly helps.
MipResult mip_rebalance(const std::vector<LowLevelObservation>& obs, const RealTensor& predicted_next);

/// Objective of a given assignment, shared by the solver and its tests.
double mip_objective(const std::vector<LowLevelObservation>& obs, const RealTensor& predicted_next,
                     const std::vector<std::size_t>& targets);

enum class ActMode { Sample, Greedy };

struct HighAction {
  std::vector<int> counts;
  double log_prob = 0.0;
};

/// K draws from the deployment policy (sample), or the largest-remainder
/// rounding of K * softmax (greedy). Greedy log_prob is that of the counts.
HighAction smart_high_act(const HighLevelObservation& obs, const PolicyBundle& policy, int vehicles, ActMode mode,
                          Rng& rng);

struct LowAction {
  std::size_t target = 0;
  double log_prob = 0.0;
};

/// One draw (or the argmax, ties to the lower index) over the feasible targets.
LowAction smart_low_act(const LowLevelObservation& obs, const PolicyBundle& policy, ActMode mode, Rng& rng);

/// Deploys uniformly and never moves.
class StayScheduler final : public AsmvScheduler {
 public:
  explicit StayScheduler(std::size_t regions) : regions_(regions) {}
  std::string name() const override { return "none"; }
  std::vector<int> deploy(const HighLevelObservation&, int vehicles) override {
    return uniform_deployment(regions_, vehicles);
  }
  std::vector<std::size_t> rebalance(const std::vector<LowLevelObservation>& obs) override;

 private:
  std::size_t regions_;
};

class IavsScheduler final : public AsmvScheduler {
 public:
  IavsScheduler(const RegionMap& map, std::size_t k = 8) : map_(&map), k_(k) {}
  std::string name() const override { return "iavs"; }
  std::vector<int> deploy(const HighLevelObservation&, int vehicles) override {
    return uniform_deployment(map_->size(), vehicles);
  }
  std::vector<std::size_t> rebalance(const std::vector<LowLevelObservation>& obs) override;

 private:
  const RegionMap* map_;
  std::size_t k_;
};

class MipScheduler final : public AsmvScheduler {
 public:
  explicit MipScheduler(std::size_t regions) : regions_(regions) {}
  std::string name() const override { return "mip"; }
  std::vector<int> deploy(const HighLevelObservation&, int vehicles) override {
    return uniform_deployment(regions_, vehicles);
  }
  std::vector<std::size_t> rebalance(const std::vector<LowLevelObservation>& obs) override;
  /// Solver label of every rebalance call so far.
  const std::vector<std::string>& solver_log() const { return solver_log_; }

 private:
  std::size_t regions_;
  std::vector<std::string> solver_log_;
};

enum class SmartVariant { Full, NoDeployment, NoRebalancing };

/// The learned hierarchical scheduler. NoDeployment swaps the deployment
/// policy for a uniform spread; NoRebalancing keeps every ASMV in place.
class SmartScheduler final : public AsmvScheduler {
 public:
  SmartScheduler(PolicyBundle policy, SmartVariant variant, ActMode mode, std::uint64_t seed)
      : policy_(std::move(policy)), variant_(variant), mode_(mode), rng_(seed) {}
  std::string name() const override;
  std::vector<int> deploy(const HighLevelObservation& obs, int vehicles) override;
  std::vector<std::size_t> rebalance(const std::vector<LowLevelObservation>& obs) override;
  const PolicyBundle& policy() const { return policy_; }

 private:
  PolicyBundle policy_;
  SmartVariant variant_;
  ActMode mode_;
  Rng rng_;
};

}  // namespace fleetlab
