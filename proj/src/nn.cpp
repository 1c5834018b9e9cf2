#include "fleetlab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fleetlab/world.hpp"

namespace fleetlab {

Mlp::Mlp(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw InputError("network needs at least an input and an output layer");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] == 0 || widths_[l + 1] == 0) throw InputError("layer widths must be positive");
    offsets_.push_back(total);
    total += widths_[l + 1] * widths_[l] + widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp::Mlp(std::vector<std::size_t> widths, double output_scale, Rng& rng) : Mlp(std::move(widths)) {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t in = widths_[l], out = widths_[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    const double scale = l + 1 == layer_count() ? output_scale : 1.0;
    double* w = params_.data() + weight_offset(l);
    for (std::size_t k = 0; k < in * out; ++k) w[k] = scale * uniform(rng, -limit, limit);
  }
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Tape tape;
  return forward(input, tape);
}

std::vector<double> Mlp::forward(std::span<const double> input, Tape& tape) const {
  if (input.size() != input_size()) {
    throw InputError("network input has " + std::to_string(input.size()) + " values, expected " +
                     std::to_string(input_size()));
  }
  tape.layers.assign(1, std::vector<double>(input.begin(), input.end()));
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t in = widths_[l], out = widths_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = w + in * out;
    const auto& x = tape.layers.back();
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = l + 1 == layer_count() ? acc : std::tanh(acc);
    }
    tape.layers.push_back(std::move(y));
  }
  return tape.layers.back();
}

void Mlp::backward(const Tape& tape, std::span<const double> grad_output, std::span<double> grad) const {
  if (grad.size() != params_.size() || grad_output.size() != output_size()) {
    throw InputError("gradient buffer shape mismatch");
  }
  std::vector<double> delta(grad_output.begin(), grad_output.end());
  for (std::size_t l = layer_count(); l-- > 0;) {
    const std::size_t in = widths_[l], out = widths_[l + 1];
    if (l + 1 != layer_count()) {
      const auto& y = tape.layers[l + 1];
      for (std::size_t o = 0; o < out; ++o) delta[o] *= 1.0 - y[o] * y[o];
    }
    const auto& x = tape.layers[l];
    const double* w = params_.data() + weight_offset(l);
    double* gw = grad.data() + weight_offset(l);
    double* gb = gw + in * out;
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* grow = gw + o * in;
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        grow[i] += d * x[i];
        prev[i] += d * row[i];
      }
    }
    delta = std::move(prev);
  }
}

Adam::Adam(std::size_t parameters, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(parameters, 0.0), v_(parameters, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw InputError("optimizer shape mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
    params[k] -= lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + epsilon_);
  }
}

std::vector<double> masked_log_softmax(std::span<const double> logits, const std::vector<bool>& mask) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const std::size_t n = logits.size();
  if (!mask.empty() && mask.size() != n) throw InputError("mask length does not match logits");
  const auto admitted = [&](std::size_t r) { return mask.empty() || mask[r]; };

  std::vector<double> out(n, kNegInf);
  double top = kNegInf;
  std::size_t at_inf = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!admitted(r)) continue;
    top = std::max(top, logits[r]);
    if (logits[r] == std::numeric_limits<double>::infinity()) ++at_inf;
  }
  if (top == kNegInf) throw InputError("every action is masked");
  if (at_inf > 0) {
    const double lp = -std::log(static_cast<double>(at_inf));
    for (std::size_t r = 0; r < n; ++r) {
      if (admitted(r) && logits[r] == top) out[r] = lp;
    }
    return out;
  }
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (admitted(r)) sum += std::exp(logits[r] - top);
  }
  const double lse = top + std::log(sum);
  for (std::size_t r = 0; r < n; ++r) {
    if (admitted(r)) out[r] = logits[r] - lse;
  }
  return out;
}

double categorical_log_prob(std::span<const double> logits, const std::vector<bool>& mask,
                            std::span<const int> counts) {
  const auto lp = masked_log_softmax(logits, mask);
  double total = 0.0;
  for (std::size_t r = 0; r < lp.size(); ++r) {
    if (counts[r] != 0) total += counts[r] * lp[r];
  }
  return total;
}

std::vector<double> categorical_log_prob_grad(std::span<const double> logits, const std::vector<bool>& mask,
                                              std::span<const int> counts) {
  const auto lp = masked_log_softmax(logits, mask);
  double draws = 0.0;
  for (int c : counts) draws += c;
  std::vector<double> g(lp.size(), 0.0);
  for (std::size_t r = 0; r < lp.size(); ++r) {
    if (!mask.empty() && !mask[r]) continue;
    g[r] = counts[r] - draws * std::exp(lp[r]);
  }
  return g;
}

}  // namespace fleetlab
