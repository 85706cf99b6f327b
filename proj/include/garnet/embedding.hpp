#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "garnet/autodiff.hpp"
#include "garnet/frame.hpp"
#include "garnet/gspoint.hpp"

namespace garnet {

// Feed-forward encoder mapping a feature vector to a point on the 2D map.
//
// Layout: dense layers input -> hidden[0] -> ... -> hidden[k-1] -> 2, with a
// PReLU (one learnable slope per hidden layer) after every layer except the
// last. Parameters live in one flat list so that the optimizer, gradient
// check and checkpoint code can walk them uniformly:
//
//   [W0, b0, a0, W1, b1, a1, ..., Wk, bk]
//
// Wi is (out x in), bi is (1 x out) and ai is (1 x 1).
class Network {
 public:
  static constexpr std::size_t kOutputDim = 2;
  static constexpr double kInitialSlope = 0.25;

  Network() = default;

  // Uniform init in [-sqrt(1/fan_in), +sqrt(1/fan_in)] from a seeded engine.
  Network(std::size_t input_dim, std::vector<std::size_t> hidden_widths, std::uint64_t seed);

  // Adopts a parameter list with the layout above. Throws InputError when the
  // shapes do not chain or any value is non-finite.
  static Network from_parameters(std::size_t input_dim, std::vector<std::size_t> hidden_widths,
                                 std::vector<Matrix> parameters);

  std::size_t input_dim() const { return input_dim_; }
  const std::vector<std::size_t>& hidden_widths() const { return hidden_; }
  std::size_t layer_count() const { return hidden_.size() + 1; }

  const Matrix& weight(std::size_t layer) const { return params_[offset(layer)]; }
  const Matrix& bias(std::size_t layer) const { return params_[offset(layer) + 1]; }
  // Only hidden layers have a slope.
  double slope(std::size_t layer) const { return params_[offset(layer) + 2](0, 0); }

  std::vector<Matrix>& parameters() { return params_; }
  const std::vector<Matrix>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  friend bool operator==(const Network&, const Network&);

 private:
  static std::size_t offset(std::size_t layer) { return layer * 3; }
  void validate() const;

  std::size_t input_dim_ = 0;
  std::vector<std::size_t> hidden_;
  std::vector<Matrix> params_;
};

// Embeds a single frame. Throws InputError on a dimension mismatch.
GSPoint forward(const Network& net, std::span<const float> values);
inline GSPoint forward(const Network& net, const FeatureFrame& frame) {
  return forward(net, std::span<const float>(frame.values));
}

// Registers the network's parameters as leaves of `graph`, in parameter order.
std::vector<Var> bind_parameters(Graph& graph, const Network& net);

// Batched forward pass on a graph: `input` is (rows x input_dim), result is
// (rows x 2). `params` comes from bind_parameters.
Var forward(Graph& graph, const Network& net, std::span<const Var> params, Var input);

// Packs frames into a (rows x dim) matrix.
Matrix stack_frames(std::span<const FeatureFrame* const> frames);

// Gradient of a scalar loss with respect to every network parameter, in
// parameter order.
using Gradients = std::vector<Matrix>;
Gradients backward(Graph& graph, std::span<const Var> params, Var loss);

// Conventional Adam constants; recorded in checkpoints.
struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// lr(epoch) = base * decay^floor(epoch / step_size).
struct StepSchedule {
  double base_lr = 1e-3;
  double decay = 0.1;
  std::uint32_t step_size = 8;
};

struct OptimizerState {
  AdamSettings adam;
  StepSchedule schedule;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;

  OptimizerState() = default;
  OptimizerState(const std::vector<Matrix>& params, AdamSettings adam_settings, StepSchedule step_schedule);
};

// One bias-corrected Adam update at learning rate `lr`. A non-finite gradient
// raises NumericError and leaves parameters and moments untouched.
void adam_step(OptimizerState& opt, std::vector<Matrix>& params, const Gradients& grads, double lr);

// Learning rate for `epoch` under the optimizer's step schedule.
double scheduler_step(const OptimizerState& opt, std::uint64_t epoch);

}  // namespace garnet
