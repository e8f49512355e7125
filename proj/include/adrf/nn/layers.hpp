#pragma once

#include "adrf/nn/registry.hpp"
#include "adrf/ops.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace adrf::nn {

using Rng = std::mt19937_64;

/// One tensor of shape [batch, features] per time step.
using Sequence = std::vector<Tensor>;

enum class Activation { none, tanh, sigmoid, leaky_relu };

inline constexpr double kLeakySlope = 0.2;

Tensor activate(const Tensor& x, Activation act);
std::string_view activation_name(Activation act);

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct Dense {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
  Activation activation = Activation::none;

  static Dense init(std::size_t in, std::size_t out, Activation act, Rng& rng);
  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
  Tensor operator()(const Tensor& x) const;
  ParameterRegistry parameters() const;
};

/// The same dense layer applied independently at every step.
Sequence time_distributed(const Dense& layer, const Sequence& inputs);

/// Copies of one [batch, features] tensor, one per step. Gradients from all
/// steps accumulate into the source.
Sequence repeat_vector(const Tensor& x, std::size_t times);

/// Gate blocks are laid out along the last axis in the order
/// input, forget, output, candidate.
struct LstmCellParams {
  Tensor W;  // [input, 4*hidden]
  Tensor U;  // [hidden, 4*hidden]
  Tensor b;  // [4*hidden]

  static LstmCellParams init(std::size_t input, std::size_t hidden, Rng& rng);
  static LstmCellParams zeros(std::size_t input, std::size_t hidden);
  std::size_t input_size() const { return W.dim(0); }
  std::size_t hidden_size() const { return U.dim(0); }
  ParameterRegistry parameters() const;
};

struct LstmState {
  Tensor h;  // [batch, hidden]
  Tensor c;  // [batch, hidden]
};

LstmState zero_state(std::size_t batch, std::size_t hidden);

/// i = σ(xW_i + hU_i + b_i), f, o likewise, g = tanh(...);
/// c' = f⊙c + i⊙g, h' = o⊙tanh(c').
LstmState lstm_cell_step(const LstmCellParams& params, const Tensor& x, const LstmState& prev);

enum class LstmMode { return_all, return_last };

struct LstmOutput {
  Sequence outputs;  // all h_t, or just h_T
  LstmState final_state;
};

LstmOutput lstm_layer(const LstmCellParams& params, const Sequence& inputs, LstmMode mode,
                      std::optional<LstmState> initial = std::nullopt);

struct Conv2dLayer {
  Tensor weight;  // [out, in, k, k]
  Tensor bias;    // [out]
  std::size_t stride = 1;
  std::size_t padding = 1;
  Activation activation = Activation::none;

  static Conv2dLayer init(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                          std::size_t stride, std::size_t padding, Activation act, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  ParameterRegistry parameters() const;
};

}  // namespace adrf::nn
