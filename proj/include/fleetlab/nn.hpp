#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fleetlab/random.hpp"

namespace fleetlab {

/// Fully connected network: tanh on hidden layers, linear output.
///
/// Parameters live in one flat array; layer l stores its weight matrix
/// (out x in, row-major) followed by its bias vector.
class Mlp {
 public:
  /// Activations of one forward pass, kept for backward. `layers[0]` is the input.
  struct Tape {
    std::vector<std::vector<double>> layers;
  };

  Mlp() = default;
  /// Zero-initialized network.
  explicit Mlp(std::vector<std::size_t> widths);
  /// Glorot-uniform weights, zero biases, last layer scaled by `output_scale`.
  Mlp(std::vector<std::size_t> widths, double output_scale, Rng& rng);

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t input_size() const { return widths_.front(); }
  std::size_t output_size() const { return widths_.back(); }
  std::size_t layer_count() const { return widths_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::vector<double> forward(std::span<const double> input) const;
  std::vector<double> forward(std::span<const double> input, Tape& tape) const;

  /// Adds dLoss/dParams to `grad` given dLoss/dOutput.
  void backward(const Tape& tape, std::span<const double> grad_output, std::span<double> grad) const;

  bool operator==(const Mlp&) const = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }

  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// First-order adaptive-moment optimizer.
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t parameters, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grad, double lr);
  std::int64_t steps() const { return t_; }

 private:
  double beta1_ = 0.9, beta2_ = 0.999, epsilon_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<double> m_, v_;
};

/// Log-softmax over the admitted entries (`mask` empty = all admitted).
/// Masked entries get -inf. Entries at +inf share all the mass.
std::vector<double> masked_log_softmax(std::span<const double> logits, const std::vector<bool>& mask);

/// log P(counts) for `sum(counts)` independent draws, without the
/// multinomial coefficient: sum_r counts[r] * log p[r].
double categorical_log_prob(std::span<const double> logits, const std::vector<bool>& mask,
                            std::span<const int> counts);

/// Gradient of categorical_log_prob with respect to the logits:
/// counts[r] - total * p[r] on admitted entries, exactly 0 on masked ones.
std::vector<double> categorical_log_prob_grad(std::span<const double> logits, const std::vector<bool>& mask,
                                              std::span<const int> counts);

}  // namespace fleetlab
