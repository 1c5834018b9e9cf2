#include "fleetlab/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>

#include "fleetlab/episode.hpp"
#include "fleetlab/sched_asmv.hpp"

namespace fleetlab {

LossSpec squared_loss(std::vector<double> target) {
  return [target = std::move(target)](const std::vector<double>& out, std::vector<double>& grad) {
    double loss = 0.0;
    grad.assign(out.size(), 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double d = out[k] - target[k];
      loss += 0.5 * d * d;
      grad[k] = d;
    }
    return loss;
  };
}

LossSpec log_prob_loss(std::vector<int> counts, std::vector<bool> mask) {
  return [counts = std::move(counts), mask = std::move(mask)](const std::vector<double>& out,
                                                              std::vector<double>& grad) {
    grad = categorical_log_prob_grad(out, mask, counts);
    for (double& g : grad) g = -g;
    return -categorical_log_prob(out, mask, counts);
  };
}

double grad_check(const Mlp& net, std::span<const double> input, const LossSpec& loss) {
  Mlp::Tape tape;
  std::vector<double> dout;
  loss(net.forward(input, tape), dout);
  std::vector<double> analytic(net.parameter_count(), 0.0);
  net.backward(tape, dout, analytic);

  constexpr double h = 1e-4;
  Mlp probe = net;
  auto params = probe.parameters();
  std::vector<double> scratch;
  const auto at = [&](std::size_t k, double value) {
    params[k] = value;
    return loss(probe.forward(input), scratch);
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    const double numeric =
        (at(k, saved - 2 * h) - 8.0 * at(k, saved - h) + 8.0 * at(k, saved + h) - at(k, saved + 2 * h)) / (12.0 * h);
    params[k] = saved;
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
  }
  return worst;
}

std::vector<double> gae_advantages(std::span<const double> rewards, std::span<const double> values, double gamma,
                                   double lambda) {
  if (rewards.empty() || rewards.size() != values.size()) {
    throw InputError("GAE needs equal-length, nonempty reward and value sequences");
  }
  const std::size_t n = rewards.size();
  std::vector<double> adv(n);
  double next_adv = 0.0, next_value = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double delta = rewards[t] + gamma * next_value - values[t];
    next_adv = delta + gamma * lambda * next_adv;
    adv[t] = next_adv;
    next_value = values[t];
  }
  return adv;
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

PpoGradients ppo_gradients(const Mlp& policy, const Mlp& critic, std::span<const PpoSample> batch, double epsilon,
                           bool normalize_advantages) {
  if (batch.empty()) throw InputError("PPO minibatch is empty");
  const double b = static_cast<double>(batch.size());
  std::vector<double> adv(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) adv[k] = batch[k].advantage;
  if (normalize_advantages && batch.size() >= 2) {
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / b;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / b);
    for (double& a : adv) a = (a - mean) / (sd + 1e-8);
  }

  PpoGradients g;
  g.policy.assign(policy.parameter_count(), 0.0);
  g.critic.assign(critic.parameter_count(), 0.0);
  auto& d = g.diagnostics;
  Mlp::Tape tape;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& s = batch[k];
    const auto logits = policy.forward(s.input, tape);
    const double ratio = std::exp(categorical_log_prob(logits, s.mask, s.counts) - s.old_log_prob);
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    const double surr = clipped_surrogate(ratio, adv[k], epsilon);
    d.surrogate += surr / b;
    if (std::abs(ratio - 1.0) > epsilon) d.clip_fraction += 1.0 / b;
    if (ratio * adv[k] <= clipped * adv[k]) {
      const double coef = -ratio * adv[k] / b;
      auto dlogits = categorical_log_prob_grad(logits, s.mask, s.counts);
      for (double& x : dlogits) x *= coef;
      policy.backward(tape, dlogits, g.policy);
    }

    const double v = critic.forward(s.input, tape)[0];
    const double err = v - s.ret;
    d.value_loss += err * err / b;
    const double dv = err / b;
    critic.backward(tape, std::span<const double>(&dv, 1), g.critic);
  }
  d.loss = -d.surrogate + 0.5 * d.value_loss;
  const auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  d.skipped = !finite(g.policy) || !finite(g.critic);
  return g;
}

PpoDiagnostics ppo_update(Mlp& policy, Mlp& critic, Adam& policy_opt, Adam& critic_opt,
                          std::span<const PpoSample> batch, double epsilon, double lr, bool normalize_advantages) {
  auto g = ppo_gradients(policy, critic, batch, epsilon, normalize_advantages);
  if (!g.diagnostics.skipped) {
    policy_opt.step(policy.parameters(), g.policy, lr);
    critic_opt.step(critic.parameters(), g.critic, lr);
  }
  return g.diagnostics;
}

void ReplayBuffer::add(LowTransition t) {
  low_.push_back(std::move(t));
  if (capacity_ > 0 && low_.size() > capacity_) low_.pop_front();
}

void ReplayBuffer::add(HighTuple h) {
  high_.push_back(std::move(h));
  if (capacity_ > 0 && high_.size() > capacity_) high_.pop_front();
}

void TrainConfig::validate() const {
  if (episodes < 0) throw InputError("episodes must be nonnegative");
  if (n_freq < 1) throw InputError("n_freq must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must lie in (0, 1)");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0, 1]");
  if (!(clip > 0.0)) throw InputError("clip must be positive");
  if (!(lr_high > 0.0) || !(lr_low > 0.0)) throw InputError("learning rates must be positive");
  if (minibatch == 0) throw InputError("minibatch must be positive");
  if (horizon < 0) throw InputError("horizon must be nonnegative");
}

namespace {

int resolved_horizon(const TrainingWorld& world, const TrainConfig& config) {
  const int t = world.forecaster->intervals();
  if (config.horizon > t) throw InputError("horizon exceeds the number of intervals");
  return config.horizon > 0 ? config.horizon : t;
}

struct UpdateStats {
  double loss = 0.0, clip_fraction = 0.0;
};

UpdateStats run_updates(Mlp& policy, Mlp& critic, Adam& popt, Adam& copt, std::vector<PpoSample> samples,
                        const TrainConfig& config, double lr, Rng& rng) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);
  UpdateStats stats;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += config.minibatch) {
    const std::size_t end = std::min(order.size(), start + config.minibatch);
    std::vector<PpoSample> mb;
    for (std::size_t k = start; k < end; ++k) mb.push_back(std::move(samples[order[k]]));
    const auto d = ppo_update(policy, critic, popt, copt, mb, config.clip, lr, config.normalize_advantages);
    stats.loss += d.loss;
    stats.clip_fraction += d.clip_fraction;
    ++batches;
  }
  if (batches > 0) {
    stats.loss /= static_cast<double>(batches);
    stats.clip_fraction /= static_cast<double>(batches);
  }
  return stats;
}

std::vector<PpoSample> low_samples(const std::deque<LowTransition>& low, const TrainConfig& config,
                                   std::size_t regions) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> trajectories;
  for (std::size_t k = 0; k < low.size(); ++k) trajectories[{low[k].episode, low[k].vehicle}].push_back(k);
  std::vector<PpoSample> out;
  out.reserve(low.size());
  for (const auto& [key, idx] : trajectories) {
    std::vector<double> rewards, values;
    for (auto k : idx) {
      rewards.push_back(low[k].reward);
      values.push_back(low[k].value);
    }
    const auto adv = gae_advantages(rewards, values, config.gamma, config.lambda);
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const auto& tr = low[idx[s]];
      PpoSample p;
      p.input = tr.input;
      p.counts.assign(regions, 0);
      p.counts[tr.action] = 1;
      p.mask = tr.mask;
      p.old_log_prob = tr.log_prob;
      p.advantage = adv[s];
      p.ret = adv[s] + tr.value;
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace

PolicyBundle initial_policy(const TrainingWorld& world, const TrainConfig& config, std::uint64_t seed) {
  const std::size_t n = world.engine->map().size();
  const double fleet = std::accumulate(world.s0_trad.begin(), world.s0_trad.end(), 0.0);
  const double count_scale = std::max(1.0, fleet / static_cast<double>(n));
  const auto daily = daily_origin_demand(*world.forecaster);
  const double mean_cell = std::accumulate(daily.begin(), daily.end(), 0.0) /
                           (static_cast<double>(n) * world.forecaster->intervals());
  const double demand_scale = mean_cell > 0.0 ? mean_cell : 1.0;
  return make_policy_bundle(n, resolved_horizon(world, config), config.hidden, count_scale, demand_scale, seed);
}

TrainResult train(const TrainingWorld& world, const TrainConfig& config, std::uint64_t seed,
                  const PolicyBundle* initial, TrainOptions options) {
  config.validate();
  if (!world.engine || !world.forecaster) throw InputError("training world needs an engine and a forecaster");
  if (world.days.empty() && config.episodes > 0) throw InputError("training world has no demand days");
  const Engine& engine = *world.engine;
  const std::size_t n = engine.map().size();
  const int horizon = resolved_horizon(world, config);

  TrainResult result;
  result.policy = initial ? *initial : initial_policy(world, config, derive_seed(seed, 0x1417));
  PolicyBundle& policy = result.policy;
  if (policy.regions != n || policy.horizon != horizon) throw InputError("initial policy does not fit the world");

  const auto adam = [&](const Mlp& net) {
    return Adam(net.parameter_count(), config.adam_beta1, config.adam_beta2, config.adam_epsilon);
  };
  Adam hp = adam(policy.high_policy), hc = adam(policy.high_critic);
  Adam lp = adam(policy.low_policy), lc = adam(policy.low_critic);
  ReplayBuffer buffer(config.buffer_capacity);
  Rng rng(seed);

  for (int e = 1; e <= config.episodes; ++e) {
    const DemandTensor& day = world.days[uniform_index(rng, world.days.size())];
    FleetState state = engine.reset(world.s0_trad, day, world.asmv_count, world.fault_rate, derive_seed(seed, e));
    state = engine.deploy_traditional(std::move(state), world.s0_trad);

    const int active = state.active_asmv_count();
    std::vector<int> allocation(n, 0);
    std::optional<HighTuple> high;
    if (active > 0) {
      const auto obs = high_level_observation(world.s0_trad, *world.forecaster, horizon);
      HighTuple h;
      h.input = encode_high(policy, obs);
      auto act = smart_high_act(obs, policy, active, ActMode::Sample, rng);
      h.counts = act.counts;
      h.log_prob = act.log_prob;
      h.value = policy.high_critic.forward(h.input)[0];
      h.episode = e;
      allocation = std::move(act.counts);
      high = std::move(h);
    }
    state = engine.deploy_asmv(std::move(state), allocation);

    std::vector<LowTransition> episode_low;
    while (state.interval < state.intervals) {
      std::vector<std::size_t> targets(state.asmvs.size(), kStay);
      const std::size_t first = episode_low.size();
      for (const auto& v : state.asmvs) {
        if (v.faulted) continue;
        const auto obs = low_level_observation(engine, state, *world.forecaster, v);
        LowTransition tr;
        tr.input = encode_low(policy, obs);
        tr.mask = obs.feasible;
        tr.value = policy.low_critic.forward(tr.input)[0];
        tr.t = state.interval;
        tr.vehicle = v.id;
        tr.episode = e;
        if (v.available) {
          const auto act = smart_low_act(obs, policy, ActMode::Sample, rng);
          tr.action = act.target;
          tr.log_prob = act.log_prob;
          targets[static_cast<std::size_t>(v.id)] = act.target;
        } else {
          tr.action = v.location;
        }
        episode_low.push_back(std::move(tr));
      }
      const auto step = engine.step(std::move(state), day, targets);
      state = std::move(step.state);
      for (std::size_t k = first; k < episode_low.size(); ++k) episode_low[k].reward = step.outcome.reward;
    }
    const double d_rate = satisfaction_ratio(state.served_so_far, state.demand_so_far);
    if (high) {
      // The episode's only high-level tuple earns the terminal reward.
      high->ret = d_rate;
      buffer.add(std::move(*high));
    }
    for (auto& tr : episode_low) {
      if (options.keep_rollouts) result.low_rollouts.push_back(tr);
      buffer.add(std::move(tr));
    }

    CurvePoint point{e, d_rate, std::nullopt, std::nullopt, 0.0};
    if (e % config.n_freq == 0) {
      std::vector<PpoSample> samples;
      for (const auto& h : buffer.high()) {
        samples.push_back({h.input, h.counts, {}, h.log_prob, mc_advantage(h.ret, h.value), h.ret});
      }
      if (!samples.empty()) {
        const auto s = run_updates(policy.high_policy, policy.high_critic, hp, hc, std::move(samples), config,
                                   config.lr_high, rng);
        point.high_loss = s.loss;
        point.clip_fraction = s.clip_fraction;
      }
      buffer.clear_high();
    } else {
      auto samples = low_samples(buffer.low(), config, n);
      if (!samples.empty()) {
        const auto s = run_updates(policy.low_policy, policy.low_critic, lp, lc, std::move(samples), config,
                                   config.lr_low, rng);
        point.low_loss = s.loss;
        point.clip_fraction = s.clip_fraction;
      }
      buffer.clear_low();
    }
    result.curve.push_back(point);
  }
  return result;
}

void write_curve(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "episode,D_rate,high_loss,low_loss,clip_frac\n";
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& p : curve) {
    out << p.episode << ',' << num(p.d_rate) << ',' << (p.high_loss ? num(*p.high_loss) : "") << ','
        << (p.low_loss ? num(*p.low_loss) : "") << ',' << num(p.clip_fraction) << '\n';
  }
}

}  // namespace fleetlab
