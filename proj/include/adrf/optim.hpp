#pragma once

#include "adrf/tensor.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace adrf {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// epoch -> multiplier on the base rate, effective from that epoch on.
  /// {50: 0.1, 80: 0.01} is "decay by 10 after 50 and again after 80".
  std::map<int, double> schedule;
};

/// Adaptive-moment optimizer over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  void set_epoch(int epoch);
  double current_learning_rate() const;
  std::uint64_t step_count() const { return step_; }
  const std::vector<Tensor>& params() const { return params_; }

  /// Applies one update from each parameter's accumulated grad, then clears
  /// the grads. Throws ContractViolation if any parameter has no grad.
  void step();
  void zero_grad();

 private:
  std::vector<Tensor> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t step_ = 0;
  int epoch_ = 0;
};

}  // namespace adrf
