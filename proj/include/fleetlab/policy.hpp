#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fleetlab/nn.hpp"
#include "fleetlab/scheduler.hpp"

namespace fleetlab {

/// The four networks of the hierarchical scheduler plus the feature scales
/// used to encode observations.
///
/// High-level input: traditional deployment (N) followed by the predicted
/// origin marginals of the first h intervals (h*N). Low-level input: own
/// location one-hot, traditional census, ASMV census, predicted next-interval
/// origin demand (N each), then battery/capacity and t/T.
struct PolicyBundle {
  std::size_t regions = 0;
  int horizon = 0;
  double count_scale = 1.0;   // divides vehicle counts
  double demand_scale = 1.0;  // divides predicted origin demand
  Mlp high_policy, high_critic, low_policy, low_critic;

  bool operator==(const PolicyBundle&) const = default;
};

std::size_t high_input_size(std::size_t regions, int horizon);
std::size_t low_input_size(std::size_t regions);

/// Fresh bundle: policies start near uniform (output layer scaled by 0.01).
PolicyBundle make_policy_bundle(std::size_t regions, int horizon, const std::vector<std::size_t>& hidden,
                                double count_scale, double demand_scale, std::uint64_t seed);

std::vector<double> encode_high(const PolicyBundle& policy, const HighLevelObservation& obs);
std::vector<double> encode_low(const PolicyBundle& policy, const LowLevelObservation& obs);

/// Binary checkpoint, all fields little-endian:
///   "SMRTPOL1", u64 regions, i64 horizon, f64 count_scale, f64 demand_scale,
///   then per network (high_policy, high_critic, low_policy, low_critic):
///   u64 width count, u64 widths..., f64 parameters (row-major weights, then bias, per layer).
void write_policy(std::ostream& out, const PolicyBundle& policy);
PolicyBundle read_policy(std::istream& in);
void save_policy(const std::string& path, const PolicyBundle& policy);
PolicyBundle load_policy(const std::string& path);

}  // namespace fleetlab
