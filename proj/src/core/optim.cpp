#include "adrf/optim.hpp"

#include <cmath>
#include <string>

namespace adrf {

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(std::move(config)) {
  if (!(config_.learning_rate > 0.0)) throw ContractViolation("adam: learning rate must be > 0");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::set_epoch(int epoch) { epoch_ = epoch; }

double Adam::current_learning_rate() const {
  double multiplier = 1.0;
  for (const auto& [from, mult] : config_.schedule) {
    if (epoch_ >= from) multiplier = mult;
  }
  return config_.learning_rate * multiplier;
}

void Adam::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (!params_[k].has_grad()) {
      throw ContractViolation("adam: parameter " + std::to_string(k) + " " +
                              shape_string(params_[k].shape()) + " has no gradient");
    }
  }
  ++step_;
  const double lr = current_learning_rate();
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto w = params_[k].mutable_data();
    auto g = params_[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double update = lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
      if (!std::isfinite(update)) throw NumericError("adam: non-finite parameter update");
      w[i] -= update;
    }
    params_[k].clear_grad();
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.clear_grad();
}

}  // namespace adrf
