#include "fleetlab/policy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "fleetlab/world.hpp"

namespace fleetlab {

namespace {

constexpr char kMagic[8] = {'S', 'M', 'R', 'T', 'P', 'O', 'L', '1'};
constexpr std::uint64_t kMaxWidth = 1u << 24;

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw InputError("truncated policy checkpoint");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_net(std::ostream& out, const Mlp& net) {
  put_u64(out, net.widths().size());
  for (auto w : net.widths()) put_u64(out, w);
  for (double p : net.parameters()) put_f64(out, p);
}

Mlp get_net(std::istream& in) {
  const auto count = get_u64(in);
  if (count < 2 || count > 64) throw InputError("policy checkpoint has a bad layer count");
  std::vector<std::size_t> widths;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto w = get_u64(in);
    if (w == 0 || w > kMaxWidth) throw InputError("policy checkpoint has a bad layer width");
    widths.push_back(static_cast<std::size_t>(w));
  }
  Mlp net(std::move(widths));
  for (double& p : net.parameters()) p = get_f64(in);
  return net;
}

}  // namespace

std::size_t high_input_size(std::size_t regions, int horizon) {
  return regions + static_cast<std::size_t>(horizon) * regions;
}

std::size_t low_input_size(std::size_t regions) { return 4 * regions + 2; }

PolicyBundle make_policy_bundle(std::size_t regions, int horizon, const std::vector<std::size_t>& hidden,
                                double count_scale, double demand_scale, std::uint64_t seed) {
  if (regions == 0 || horizon <= 0) throw InputError("policy needs regions and a positive horizon");
  if (!(count_scale > 0.0) || !(demand_scale > 0.0)) throw InputError("feature scales must be positive");
  Rng rng(seed);
  const auto widths = [&](std::size_t in, std::size_t out) {
    std::vector<std::size_t> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
  };
  PolicyBundle b;
  b.regions = regions;
  b.horizon = horizon;
  b.count_scale = count_scale;
  b.demand_scale = demand_scale;
  const std::size_t hi = high_input_size(regions, horizon), lo = low_input_size(regions);
  b.high_policy = Mlp(widths(hi, regions), 0.01, rng);
  b.high_critic = Mlp(widths(hi, 1), 1.0, rng);
  b.low_policy = Mlp(widths(lo, regions), 0.01, rng);
  b.low_critic = Mlp(widths(lo, 1), 1.0, rng);
  return b;
}

std::vector<double> encode_high(const PolicyBundle& policy, const HighLevelObservation& obs) {
  const std::size_t n = policy.regions;
  if (obs.trad_deployment.size() != n || obs.predicted_horizon.regions != n ||
      obs.predicted_horizon.intervals != policy.horizon) {
    throw InputError("high-level observation does not match the policy dimensions");
  }
  std::vector<double> x;
  x.reserve(high_input_size(n, policy.horizon));
  for (int c : obs.trad_deployment) x.push_back(c / policy.count_scale);
  for (int t = 0; t < policy.horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) x.push_back(obs.predicted_horizon.origin(t, i) / policy.demand_scale);
  }
  return x;
}

std::vector<double> encode_low(const PolicyBundle& policy, const LowLevelObservation& obs) {
  const std::size_t n = policy.regions;
  if (obs.trad_counts.size() != n || obs.auto_counts.size() != n || obs.own_location >= n ||
      obs.predicted_next.regions != n || obs.predicted_next.intervals < 1) {
    throw InputError("low-level observation does not match the policy dimensions");
  }
  std::vector<double> x(low_input_size(n), 0.0);
  x[obs.own_location] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[n + i] = obs.trad_counts[i] / policy.count_scale;
    x[2 * n + i] = obs.auto_counts[i];
    x[3 * n + i] = obs.predicted_next.origin(0, i) / policy.demand_scale;
  }
  x[4 * n] = obs.battery_capacity > 0.0 ? obs.own_battery / obs.battery_capacity : 0.0;
  x[4 * n + 1] = obs.intervals > 0 ? static_cast<double>(obs.interval) / obs.intervals : 0.0;
  return x;
}

void write_policy(std::ostream& out, const PolicyBundle& policy) {
  out.write(kMagic, sizeof kMagic);
  put_u64(out, policy.regions);
  put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(policy.horizon)));
  put_f64(out, policy.count_scale);
  put_f64(out, policy.demand_scale);
  put_net(out, policy.high_policy);
  put_net(out, policy.high_critic);
  put_net(out, policy.low_policy);
  put_net(out, policy.low_critic);
}

PolicyBundle read_policy(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw InputError("not a policy checkpoint");
  PolicyBundle b;
  b.regions = static_cast<std::size_t>(get_u64(in));
  b.horizon = static_cast<int>(static_cast<std::int64_t>(get_u64(in)));
  b.count_scale = get_f64(in);
  b.demand_scale = get_f64(in);
  b.high_policy = get_net(in);
  b.high_critic = get_net(in);
  b.low_policy = get_net(in);
  b.low_critic = get_net(in);
  const std::size_t hi = high_input_size(b.regions, b.horizon), lo = low_input_size(b.regions);
  if (b.high_policy.input_size() != hi || b.high_policy.output_size() != b.regions || b.high_critic.input_size() != hi ||
      b.high_critic.output_size() != 1 || b.low_policy.input_size() != lo || b.low_policy.output_size() != b.regions ||
      b.low_critic.input_size() != lo || b.low_critic.output_size() != 1) {
    throw InputError("policy checkpoint networks do not match its dimensions");
  }
  return b;
}

void save_policy(const std::string& path, const PolicyBundle& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write policy checkpoint " + path);
  write_policy(out, policy);
  if (!out) throw InputError("failed writing policy checkpoint " + path);
}

PolicyBundle load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open policy checkpoint " + path);
  return read_policy(in);
}

}  // namespace fleetlab
