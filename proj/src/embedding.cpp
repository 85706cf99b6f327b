#include "garnet/embedding.hpp"

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "garnet/errors.hpp"

namespace garnet {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

Network::Network(std::size_t input_dim, std::vector<std::size_t> hidden_widths, std::uint64_t seed)
    : input_dim_(input_dim), hidden_(std::move(hidden_widths)) {
  if (input_dim_ == 0) throw InputError("network input dimension must be positive");
  std::mt19937_64 rng(seed);
  std::size_t fan_in = input_dim_;
  for (std::size_t layer = 0; layer < layer_count(); ++layer) {
    const std::size_t fan_out = layer < hidden_.size() ? hidden_[layer] : kOutputDim;
    if (fan_out == 0) throw InputError("hidden layer width must be positive");
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    Matrix b(1, fan_out);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = dist(rng);
    params_.push_back(std::move(w));
    params_.push_back(std::move(b));
    if (layer < hidden_.size()) params_.push_back(Matrix::Constant(1, 1, kInitialSlope));
    fan_in = fan_out;
  }
}

Network Network::from_parameters(std::size_t input_dim, std::vector<std::size_t> hidden_widths,
                                 std::vector<Matrix> parameters) {
  Network net;
  net.input_dim_ = input_dim;
  net.hidden_ = std::move(hidden_widths);
  net.params_ = std::move(parameters);
  net.validate();
  return net;
}

void Network::validate() const {
  const std::size_t expected = hidden_.size() * 3 + 2;
  if (params_.size() != expected) {
    throw InputError("network expects " + std::to_string(expected) + " parameter blocks, got " +
                     std::to_string(params_.size()));
  }
  std::size_t fan_in = input_dim_;
  for (std::size_t layer = 0; layer < layer_count(); ++layer) {
    const std::size_t fan_out = layer < hidden_.size() ? hidden_[layer] : kOutputDim;
    const Matrix& w = weight(layer);
    const Matrix& b = bias(layer);
    if (static_cast<std::size_t>(w.rows()) != fan_out || static_cast<std::size_t>(w.cols()) != fan_in ||
        b.rows() != 1 || static_cast<std::size_t>(b.cols()) != fan_out) {
      throw InputError("layer " + std::to_string(layer) + " has inconsistent shapes");
    }
    if (layer < hidden_.size() && params_[offset(layer) + 2].size() != 1) {
      throw InputError("layer " + std::to_string(layer) + " slope must be 1x1");
    }
    fan_in = fan_out;
  }
  for (const Matrix& p : params_) {
    if (!all_finite(p)) throw InputError("network parameters must be finite");
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix& p : params_) n += static_cast<std::size_t>(p.size());
  return n;
}

bool operator==(const Network& a, const Network& b) {
  if (a.input_dim_ != b.input_dim_ || a.hidden_ != b.hidden_ || a.params_.size() != b.params_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    if (a.params_[i].rows() != b.params_[i].rows() || a.params_[i].cols() != b.params_[i].cols()) return false;
    if (a.params_[i] != b.params_[i]) return false;
  }
  return true;
}

GSPoint forward(const Network& net, std::span<const float> values) {
  if (values.size() != net.input_dim()) {
    throw InputError("frame dimension " + std::to_string(values.size()) + " does not match network input " +
                     std::to_string(net.input_dim()));
  }
  Eigen::VectorXd h(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) h[static_cast<Eigen::Index>(i)] = values[i];
  for (std::size_t layer = 0; layer < net.layer_count(); ++layer) {
    Eigen::VectorXd next = net.weight(layer) * h + net.bias(layer).row(0).transpose();
    if (layer + 1 < net.layer_count()) {
      const double a = net.slope(layer);
      next = next.unaryExpr([a](double v) { return v > 0.0 ? v : a * v; });
    }
    h = std::move(next);
  }
  return {h[0], h[1]};
}

std::vector<Var> bind_parameters(Graph& graph, const Network& net) {
  std::vector<Var> vars;
  vars.reserve(net.parameters().size());
  for (const Matrix& p : net.parameters()) vars.push_back(graph.parameter(p));
  return vars;
}

Var forward(Graph& graph, const Network& net, std::span<const Var> params, Var input) {
  if (params.size() != net.parameters().size()) throw InputError("parameter binding does not match network");
  if (static_cast<std::size_t>(graph.value(input).cols()) != net.input_dim()) {
    throw InputError("batch width does not match network input");
  }
  Var h = input;
  for (std::size_t layer = 0; layer < net.layer_count(); ++layer) {
    const std::size_t base = layer * 3;
    h = graph.linear(h, params[base], params[base + 1]);
    if (layer + 1 < net.layer_count()) h = graph.prelu(h, params[base + 2]);
  }
  return h;
}

Matrix stack_frames(std::span<const FeatureFrame* const> frames) {
  if (frames.empty()) return Matrix();
  const std::size_t dim = frames.front()->dimension();
  Matrix out(frames.size(), dim);
  for (std::size_t r = 0; r < frames.size(); ++r) {
    if (frames[r]->dimension() != dim) throw InputError("frames in a batch must share one dimension");
    for (std::size_t c = 0; c < dim; ++c) out(r, c) = frames[r]->values[c];
  }
  return out;
}

Gradients backward(Graph& graph, std::span<const Var> params, Var loss) {
  graph.backward(loss);
  Gradients grads;
  grads.reserve(params.size());
  for (Var p : params) grads.push_back(graph.grad(p));
  return grads;
}

OptimizerState::OptimizerState(const std::vector<Matrix>& params, AdamSettings adam_settings,
                               StepSchedule step_schedule)
    : adam(adam_settings), schedule(step_schedule) {
  for (const Matrix& p : params) {
    first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void adam_step(OptimizerState& opt, std::vector<Matrix>& params, const Gradients& grads, double lr) {
  if (params.size() != grads.size() || params.size() != opt.first_moment.size()) {
    throw InputError("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols() ||
        params[i].rows() != opt.first_moment[i].rows() || params[i].cols() != opt.first_moment[i].cols()) {
      throw InputError("adam_step: shape mismatch in block " + std::to_string(i));
    }
    if (!grads[i].allFinite()) throw NumericError("adam_step: non-finite gradient in block " + std::to_string(i));
  }

  const auto& s = opt.adam;
  opt.step += 1;
  const double t = static_cast<double>(opt.step);
  const double correction1 = 1.0 - std::pow(s.beta1, t);
  const double correction2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = opt.first_moment[i];
    Matrix& v = opt.second_moment[i];
    const Matrix& g = grads[i];
    m = s.beta1 * m + (1.0 - s.beta1) * g;
    v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const double m_hat = m.data()[k] / correction1;
      const double v_hat = v.data()[k] / correction2;
      params[i].data()[k] -= lr * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
  }
}

double scheduler_step(const OptimizerState& opt, std::uint64_t epoch) {
  const auto& sched = opt.schedule;
  const std::uint64_t decays = sched.step_size == 0 ? 0 : epoch / sched.step_size;
  return sched.base_lr * std::pow(sched.decay, static_cast<double>(decays));
}

}  // namespace garnet
