#include "adrf/nn/layers.hpp"

#include <cmath>
#include <string>

namespace adrf::nn {

Tensor activate(const Tensor& x, Activation act) {
  switch (act) {
    case Activation::none: return x;
    case Activation::tanh: return adrf::tanh(x);
    case Activation::sigmoid: return adrf::sigmoid(x);
    case Activation::leaky_relu: return adrf::leaky_relu(x, kLeakySlope);
  }
  return x;
}

std::string_view activation_name(Activation act) {
  switch (act) {
    case Activation::none: return "none";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::leaky_relu: return "leaky_relu";
  }
  return "?";
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = glorot_bound(fan_in, fan_out);
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

// ---------------------------------------------------------------------------

Dense Dense::init(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  return {glorot_uniform({in, out}, in, out, rng), Tensor({out}, 0.0, true), act};
}

Tensor Dense::operator()(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != in_features()) {
    throw ContractViolation("dense: expected [batch," + std::to_string(in_features()) + "], got " +
                            shape_string(x.shape()));
  }
  return activate(add(matmul(x, weight), bias), activation);
}

ParameterRegistry Dense::parameters() const {
  ParameterRegistry r;
  r.add("weight", weight);
  r.add("bias", bias);
  return r;
}

Sequence time_distributed(const Dense& layer, const Sequence& inputs) {
  Sequence out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) out.push_back(layer(x));
  return out;
}

Sequence repeat_vector(const Tensor& x, std::size_t times) {
  if (times == 0) throw ContractViolation("repeat_vector: times must be >= 1");
  return Sequence(times, x);
}

// ---------------------------------------------------------------------------

LstmCellParams LstmCellParams::init(std::size_t input, std::size_t hidden, Rng& rng) {
  LstmCellParams p;
  p.W = glorot_uniform({input, 4 * hidden}, input, 4 * hidden, rng);
  p.U = glorot_uniform({hidden, 4 * hidden}, hidden, 4 * hidden, rng);
  std::vector<double> b(4 * hidden, 0.0);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;  // forget gate
  p.b = Tensor({4 * hidden}, std::move(b), true);
  return p;
}

LstmCellParams LstmCellParams::zeros(std::size_t input, std::size_t hidden) {
  return {Tensor({input, 4 * hidden}, 0.0, true), Tensor({hidden, 4 * hidden}, 0.0, true),
          Tensor({4 * hidden}, 0.0, true)};
}

ParameterRegistry LstmCellParams::parameters() const {
  ParameterRegistry r;
  r.add("W", W);
  r.add("U", U);
  r.add("b", b);
  return r;
}

LstmState zero_state(std::size_t batch, std::size_t hidden) {
  return {Tensor({batch, hidden}, 0.0), Tensor({batch, hidden}, 0.0)};
}

LstmState lstm_cell_step(const LstmCellParams& params, const Tensor& x, const LstmState& prev) {
  const std::size_t H = params.hidden_size();
  if (x.rank() != 2 || x.dim(1) != params.input_size()) {
    throw ContractViolation("lstm: input must be [batch," + std::to_string(params.input_size()) +
                            "], got " + shape_string(x.shape()));
  }
  const Shape state_shape{x.dim(0), H};
  if (prev.h.shape() != state_shape || prev.c.shape() != state_shape) {
    throw ContractViolation("lstm: state must be " + shape_string(state_shape) + ", got h " +
                            shape_string(prev.h.shape()) + " c " + shape_string(prev.c.shape()));
  }
  Tensor z = add(add(matmul(x, params.W), matmul(prev.h, params.U)), params.b);
  Tensor i = sigmoid(narrow(z, 1, 0, H));
  Tensor f = sigmoid(narrow(z, 1, H, H));
  Tensor o = sigmoid(narrow(z, 1, 2 * H, H));
  Tensor g = adrf::tanh(narrow(z, 1, 3 * H, H));
  Tensor c = add(mul(f, prev.c), mul(i, g));
  Tensor h = mul(o, adrf::tanh(c));
  return {h, c};
}

LstmOutput lstm_layer(const LstmCellParams& params, const Sequence& inputs, LstmMode mode,
                      std::optional<LstmState> initial) {
  if (inputs.empty()) throw ContractViolation("lstm_layer: empty input sequence");
  LstmState state = initial ? *initial : zero_state(inputs.front().dim(0), params.hidden_size());
  LstmOutput out;
  for (const auto& x : inputs) {
    state = lstm_cell_step(params, x, state);
    if (mode == LstmMode::return_all) out.outputs.push_back(state.h);
  }
  if (mode == LstmMode::return_last) out.outputs.push_back(state.h);
  out.final_state = state;
  return out;
}

// ---------------------------------------------------------------------------

Conv2dLayer Conv2dLayer::init(std::size_t in_channels, std::size_t out_channels,
                              std::size_t kernel, std::size_t stride, std::size_t padding,
                              Activation act, Rng& rng) {
  const std::size_t kk = kernel * kernel;
  return {glorot_uniform({out_channels, in_channels, kernel, kernel}, in_channels * kk,
                         out_channels * kk, rng),
          Tensor({out_channels}, 0.0, true), stride, padding, act};
}

Tensor Conv2dLayer::operator()(const Tensor& x) const {
  return activate(conv2d(x, weight, bias, {stride, padding}), activation);
}

ParameterRegistry Conv2dLayer::parameters() const {
  ParameterRegistry r;
  r.add("weight", weight);
  r.add("bias", bias);
  return r;
}

}  // namespace adrf::nn
