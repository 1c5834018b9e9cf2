#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fleetlab/engine.hpp"
#include "fleetlab/forecast.hpp"
#include "fleetlab/nn.hpp"
#include "fleetlab/policy.hpp"

namespace fleetlab {

/// Loss on a network output: returns the value and writes dLoss/dOutput.
using LossSpec = std::function<double(const std::vector<double>& output, std::vector<double>& grad)>;

LossSpec squared_loss(std::vector<double> target);
/// Negative categorical log-probability of `counts` under masked logits.
LossSpec log_prob_loss(std::vector<int> counts, std::vector<bool> mask);

/// Largest relative error between backprop and five-point central
/// differences (step 1e-4) over all parameters; relative to
/// max(|analytic|, |numeric|, 1e-6).
double grad_check(const Mlp& net, std::span<const double> input, const LossSpec& loss);

/// A_t = delta_t + gamma*lambda*A_{t+1}, with V(s_{T+1}) = 0.
std::vector<double> gae_advantages(std::span<const double> rewards, std::span<const double> values, double gamma,
                                   double lambda);

inline double mc_advantage(double terminal_return, double value) { return terminal_return - value; }

/// Per-sample PPO objective min(r*A, clip(r, 1-eps, 1+eps)*A).
double clipped_surrogate(double ratio, double advantage, double epsilon);

struct PpoSample {
  std::vector<double> input;
  std::vector<int> counts;   // action as per-category draw counts
  std::vector<bool> mask;    // empty = all admitted
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
};

struct PpoDiagnostics {
  double loss = 0.0;        // policy loss + 0.5 * value loss
  double surrogate = 0.0;   // mean clipped objective
  double value_loss = 0.0;  // mean squared error
  double clip_fraction = 0.0;
  bool skipped = false;     // non-finite gradient
};

struct PpoGradients {
  std::vector<double> policy, critic;
  PpoDiagnostics diagnostics;
};

/// Gradients of L = -mean(min(r*A, clip(r)*A)) + 0.5*mean((V - ret)^2).
PpoGradients ppo_gradients(const Mlp& policy, const Mlp& critic, std::span<const PpoSample> batch, double epsilon,
                           bool normalize_advantages);

/// One gradient step on both networks; skipped entirely if any gradient is
/// non-finite.
PpoDiagnostics ppo_update(Mlp& policy, Mlp& critic, Adam& policy_opt, Adam& critic_opt,
                          std::span<const PpoSample> batch, double epsilon, double lr,
                          bool normalize_advantages = true);

struct LowTransition {
  std::vector<double> input;
  std::size_t action = 0;
  std::vector<bool> mask;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  int t = 0;
  int vehicle = 0;
  int episode = 0;
};

struct HighTuple {
  std::vector<double> input;
  std::vector<int> counts;
  double log_prob = 0.0;
  double ret = 0.0;
  double value = 0.0;
  int episode = 0;
};

/// Bounded FIFO store of rollouts; capacity 0 means unbounded.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 0) : capacity_(capacity) {}
  void add(LowTransition t);
  void add(HighTuple h);
  const std::deque<LowTransition>& low() const { return low_; }
  const std::deque<HighTuple>& high() const { return high_; }
  void clear_low() { low_.clear(); }
  void clear_high() { high_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<LowTransition> low_;
  std::deque<HighTuple> high_;
};

struct TrainConfig {
  int episodes = 1000;
  int n_freq = 5;
  double lr_high = 3e-4;
  double lr_low = 1e-4;
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  std::size_t minibatch = 64;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_epsilon = 1e-8;
  std::vector<std::size_t> hidden{64, 64};
  int horizon = 0;  // 0 = whole day
  bool normalize_advantages = true;
  std::size_t buffer_capacity = 0;

  void validate() const;
};

/// Everything one training episode needs. `days` are sampled uniformly.
struct TrainingWorld {
  const Engine* engine = nullptr;
  const Forecaster* forecaster = nullptr;
  std::vector<DemandTensor> days;
  std::vector<int> s0_trad;
  int asmv_count = 0;
  double fault_rate = 0.0;
};

struct CurvePoint {
  int episode = 0;
  double d_rate = 0.0;
  std::optional<double> high_loss, low_loss;
  double clip_fraction = 0.0;
};

struct TrainResult {
  PolicyBundle policy;
  std::vector<CurvePoint> curve;
  /// Populated only when TrainOptions::keep_rollouts is set.
  std::vector<LowTransition> low_rollouts;
};

struct TrainOptions {
  bool keep_rollouts = false;
};

/// Fresh bundle sized for `world` with feature scales taken from its fleet
/// and forecast.
PolicyBundle initial_policy(const TrainingWorld& world, const TrainConfig& config, std::uint64_t seed);

/// Alternating hierarchical PPO. Starts from `initial` when given.
TrainResult train(const TrainingWorld& world, const TrainConfig& config, std::uint64_t seed,
                  const PolicyBundle* initial = nullptr, TrainOptions options = {});

/// `episode,D_rate,high_loss,low_loss,clip_frac`; absent losses are empty.
void write_curve(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace fleetlab
