#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include <doctest.h>

#include "fleetlab/learn.hpp"
#include "fleetlab/scenario.hpp"

using namespace fleetlab;

namespace {

// A_t = sum_l (gamma*lambda)^l delta_{t+l}, summed directly.
std::vector<double> gae_oracle(const std::vector<double>& r, const std::vector<double>& v, double g, double l) {
  const std::size_t n = r.size();
  std::vector<double> a(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = t; k < n; ++k) {
      const double next = k + 1 < n ? v[k + 1] : 0.0;
      a[t] += std::pow(g * l, static_cast<double>(k - t)) * (r[k] + g * next - v[k]);
    }
  }
  return a;
}

struct SmallWorld {
  RegionMap map;
  std::unique_ptr<Engine> engine;
  DemandPredictor predictor;
  TrainingWorld world;

  SmallWorld() {
    map = build_region_map({{41.88, -87.63}, {41.89, -87.62}, {41.90, -87.64}});
    WorldConfig c;
    c.intervals_per_day = 4;
    engine = std::make_unique<Engine>(map, c);
    std::vector<DemandTensor> days;
    const std::vector<std::vector<double>> rates{{1.0, 0.5, 0.2}, {0.2, 0.6, 0.2}, {0.1, 0.3, 0.9}};
    for (std::uint64_t d = 0; d < 4; ++d) days.push_back(generate_synthetic_demand(map, 4, rates, {}, d));
    predictor = fit_predictor(days);
    world = TrainingWorld{engine.get(), &predictor, days, {2, 1, 1}, 2, 0.0};
  }
};

TrainConfig small_config(int episodes, int n_freq) {
  TrainConfig c;
  c.episodes = episodes;
  c.n_freq = n_freq;
  c.hidden = {8};
  c.minibatch = 8;
  c.lr_high = 1e-2;
  c.lr_low = 1e-2;
  return c;
}

PpoSample sample_with_ratio(const Mlp& policy, const std::vector<double>& input, double ratio, double advantage) {
  PpoSample s;
  s.input = input;
  s.counts = {0, 1, 0};
  const auto logits = policy.forward(input);
  s.old_log_prob = categorical_log_prob(logits, {}, s.counts) - std::log(ratio);
  s.advantage = advantage;
  s.ret = 0.5;
  return s;
}

bool all_zero(const std::vector<double>& v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("learn") {

TEST_CASE("GAE limits and the double-sum oracle") {
  const std::vector<double> r{0.0, 0.0, 1.0}, v{0.2, 0.5, 0.8};
  const auto a = gae_advantages(r, v, 0.99, 0.95);
  const auto o = gae_oracle(r, v, 0.99, 0.95);
  for (std::size_t t = 0; t < 3; ++t) CHECK(std::abs(a[t] - o[t]) < 1e-12);

  const auto td = gae_advantages(r, v, 0.9, 0.0);
  CHECK(td[0] == 0.0 + 0.9 * 0.5 - 0.2);
  CHECK(td[2] == 1.0 - 0.8);

  const std::vector<double> zeros(3, 0.0), rew{1.0, 2.0, 3.0};
  const auto mc = gae_advantages(rew, zeros, 0.5, 1.0);
  CHECK(mc[0] == doctest::Approx(1.0 + 0.5 * 2.0 + 0.25 * 3.0));
  CHECK(mc[2] == 3.0);

  CHECK_THROWS_AS(gae_advantages(std::vector<double>{}, std::vector<double>{}, 0.9, 0.9), InputError);
  CHECK_THROWS_AS(gae_advantages(rew, std::vector<double>{1.0}, 0.9, 0.9), InputError);
}

TEST_CASE("Monte Carlo advantage") {
  CHECK(mc_advantage(0.7, 0.7) == 0.0);
  CHECK(mc_advantage(0.9, 0.5) == doctest::Approx(0.4));
  CHECK(mc_advantage(0.2, 0.6) < 0.0);
}

TEST_CASE("clipped surrogate values") {
  CHECK(clipped_surrogate(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(clipped_surrogate(0.5, 1.0, 0.2) == doctest::Approx(0.5));
  CHECK(clipped_surrogate(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  CHECK(clipped_surrogate(1.5, -1.0, 0.2) == doctest::Approx(-1.5));
}

TEST_CASE("PPO gradient vanishes on the adverse clipped side only") {
  Rng rng(6);
  const Mlp policy({4, 6, 3}, 1.0, rng);
  const Mlp critic({4, 6, 1}, 1.0, rng);
  const std::vector<double> in{0.2, -0.3, 0.5, 0.1};
  for (auto [ratio, adv] : {std::pair{1.5, 1.0}, std::pair{0.5, -1.0}}) {
    const std::vector<PpoSample> batch{sample_with_ratio(policy, in, ratio, adv)};
    const auto g = ppo_gradients(policy, critic, batch, 0.2, false);
    CHECK(all_zero(g.policy));
    CHECK_FALSE(all_zero(g.critic));
    CHECK(g.diagnostics.clip_fraction == 1.0);
  }
  for (auto [ratio, adv] : {std::pair{1.5, -1.0}, std::pair{0.5, 1.0}, std::pair{1.1, 1.0}}) {
    const std::vector<PpoSample> batch{sample_with_ratio(policy, in, ratio, adv)};
    CHECK_FALSE(all_zero(ppo_gradients(policy, critic, batch, 0.2, false).policy));
  }
  const std::vector<PpoSample> one{sample_with_ratio(policy, in, 1.5, 1.0)};
  CHECK(ppo_gradients(policy, critic, one, 0.2, false).diagnostics.surrogate == doctest::Approx(1.2));
}

TEST_CASE("PPO at the old policy has unit ratio") {
  Rng rng(7);
  const Mlp policy({4, 6, 3}, 1.0, rng);
  const Mlp critic({4, 6, 1}, 1.0, rng);
  std::vector<PpoSample> batch;
  double mean = 0.0;
  for (int k = 0; k < 5; ++k) {
    std::vector<double> in{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    batch.push_back(sample_with_ratio(policy, in, 1.0, uniform(rng, -1, 1)));
    mean += batch.back().advantage / 5.0;
  }
  const auto d = ppo_gradients(policy, critic, batch, 0.2, false).diagnostics;
  CHECK(d.surrogate == doctest::Approx(mean).epsilon(1e-12));
  CHECK(d.clip_fraction == 0.0);
  CHECK_THROWS_AS(ppo_gradients(policy, critic, std::vector<PpoSample>{}, 0.2, false), InputError);
}

TEST_CASE("non-finite gradients skip the update") {
  Rng rng(8);
  Mlp policy({2, 3, 3}, 1.0, rng);
  Mlp critic({2, 3, 1}, 1.0, rng);
  const Mlp p0 = policy, c0 = critic;
  Adam po(policy.parameter_count()), co(critic.parameter_count());
  auto s = sample_with_ratio(policy, {0.1, 0.2}, 1.0, 1.0);
  s.ret = std::numeric_limits<double>::quiet_NaN();
  const std::vector<PpoSample> batch{s};
  const auto d = ppo_update(policy, critic, po, co, batch, 0.2, 1e-2, false);
  CHECK(d.skipped);
  CHECK(policy == p0);
  CHECK(critic == c0);
}

TEST_CASE("a PPO step raises the probability of advantaged actions") {
  Rng rng(9);
  Mlp policy({2, 3}, 1.0, rng);
  Mlp critic({2, 1}, 1.0, rng);
  Adam po(policy.parameter_count()), co(critic.parameter_count());
  const std::vector<double> in{1.0, 0.5};
  const double before = categorical_log_prob(policy.forward(in), {}, std::vector<int>{0, 1, 0});
  const std::vector<PpoSample> batch{sample_with_ratio(policy, in, 1.0, 1.0)};
  const auto d = ppo_update(policy, critic, po, co, batch, 0.2, 1e-2, false);
  CHECK_FALSE(d.skipped);
  CHECK(categorical_log_prob(policy.forward(in), {}, std::vector<int>{0, 1, 0}) > before);
}

TEST_CASE("replay buffer evicts oldest entries past capacity") {
  ReplayBuffer b(2);
  for (int e = 0; e < 3; ++e) {
    LowTransition t;
    t.episode = e;
    b.add(t);
  }
  REQUIRE(b.low().size() == 2);
  CHECK(b.low().front().episode == 1);
  b.clear_low();
  CHECK(b.low().empty());
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.lr_high == 3e-4);
  CHECK(c.lr_low == 1e-4);
  CHECK(c.clip == 0.2);
  CHECK(c.minibatch == 64);
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = TrainConfig{};
  c.n_freq = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = TrainConfig{};
  c.clip = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("zero episodes returns the initial bundle") {
  SmallWorld w;
  const auto config = small_config(0, 5);
  const auto init = initial_policy(w.world, config, 11);
  const auto r = train(w.world, config, 3, &init);
  CHECK(r.policy == init);
  CHECK(r.curve.empty());
}

TEST_CASE("N_freq = 1 trains only the high level") {
  SmallWorld w;
  const auto config = small_config(6, 1);
  const auto init = initial_policy(w.world, config, 11);
  const auto r = train(w.world, config, 3, &init);
  CHECK(r.policy.low_policy == init.low_policy);
  CHECK(r.policy.low_critic == init.low_critic);
  CHECK_FALSE(r.policy.high_policy == init.high_policy);
  for (const auto& p : r.curve) {
    CHECK(p.high_loss.has_value());
    CHECK_FALSE(p.low_loss.has_value());
  }
}

TEST_CASE("alternation follows the episode counter") {
  SmallWorld w;
  const auto r = train(w.world, small_config(10, 5), 3);
  REQUIRE(r.curve.size() == 10);
  for (const auto& p : r.curve) {
    CHECK(p.high_loss.has_value() == (p.episode % 5 == 0));
    CHECK(p.low_loss.has_value() == (p.episode % 5 != 0));
  }
}

TEST_CASE("training is reproducible under a fixed seed") {
  SmallWorld w;
  const auto a = train(w.world, small_config(10, 3), 21);
  const auto b = train(w.world, small_config(10, 3), 21);
  CHECK(a.policy == b.policy);
  std::ostringstream ca, cb;
  write_curve(ca, a.curve);
  write_curve(cb, b.curve);
  CHECK(ca.str() == cb.str());
  CHECK(ca.str().rfind("episode,D_rate,high_loss,low_loss,clip_frac\n", 0) == 0);
}

TEST_CASE("stored low-level rewards are zero until the terminal D/U") {
  SmallWorld w;
  const auto r = train(w.world, small_config(8, 4), 5, nullptr, TrainOptions{true});
  std::map<int, double> rate;
  for (const auto& p : r.curve) rate[p.episode] = p.d_rate;
  REQUIRE_FALSE(r.low_rollouts.empty());
  std::map<std::pair<int, int>, int> last_t;
  for (const auto& tr : r.low_rollouts) {
    auto& t = last_t[{tr.episode, tr.vehicle}];
    CHECK(tr.t >= t);  // time-ordered per vehicle
    t = tr.t;
    if (tr.t < 3) {
      CHECK(tr.reward == 0.0);
    } else {
      CHECK(tr.reward == rate[tr.episode]);
    }
  }
}

TEST_CASE("training resumes from a saved bundle bit-exactly") {
  SmallWorld w;
  const auto first = train(w.world, small_config(4, 2), 1);
  std::stringstream s;
  write_policy(s, first.policy);
  const auto loaded = read_policy(s);
  CHECK(loaded == first.policy);
  const auto a = train(w.world, small_config(4, 2), 2, &first.policy);
  const auto b = train(w.world, small_config(4, 2), 2, &loaded);
  CHECK(a.policy == b.policy);
}

}
