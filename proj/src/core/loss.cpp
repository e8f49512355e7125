#include "adrf/loss.hpp"

#include <cmath>
#include <string>

namespace adrf {

LossKind parse_loss_kind(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "mae") return LossKind::mae;
  if (name == "mse+mae" || name == "mse_mae") return LossKind::mse_mae;
  if (name == "bce") return LossKind::bce;
  throw ContractViolation("unknown loss kind '" + std::string(name) + "'");
}

Tensor loss(LossKind kind, const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    throw ContractViolation("loss: prediction " + shape_string(prediction.shape()) +
                            " vs target " + shape_string(target.shape()));
  }
  auto p = prediction.data();
  auto t = target.data();
  const std::size_t n = p.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  if (kind == LossKind::bce) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(p[i] > 0.0 && p[i] < 1.0)) {
        throw ContractViolation("bce: prediction " + std::to_string(p[i]) + " outside (0,1)");
      }
      if (t[i] < 0.0 || t[i] > 1.0) throw ContractViolation("bce: target outside [0,1]");
    }
  }

  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = p[i] - t[i];
    switch (kind) {
      case LossKind::mse: value += d * d; break;
      case LossKind::mae: value += std::abs(d); break;
      case LossKind::mse_mae: value += d * d + std::abs(d); break;
      case LossKind::bce: value -= t[i] * std::log(p[i]) + (1.0 - t[i]) * std::log1p(-p[i]); break;
    }
  }
  value *= inv_n;

  const char* name = kind == LossKind::mse ? "mse_loss"
                     : kind == LossKind::mae ? "mae_loss"
                     : kind == LossKind::mse_mae ? "mse_mae_loss"
                                                 : "bce_loss";
  return make_result(name, {1}, {value}, {prediction},
                     [prediction, target, kind, inv_n](std::span<const double> g) {
                       Tensor pred = prediction;
                       auto p = pred.data();
                       auto t = target.data();
                       auto dst = pred.mutable_grad();
                       for (std::size_t i = 0; i < p.size(); ++i) {
                         const double d = p[i] - t[i];
                         const double sign = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                         double dl = 0.0;
                         switch (kind) {
                           case LossKind::mse: dl = 2.0 * d; break;
                           case LossKind::mae: dl = sign; break;
                           case LossKind::mse_mae: dl = 2.0 * d + sign; break;
                           case LossKind::bce: dl = (p[i] - t[i]) / (p[i] * (1.0 - p[i])); break;
                         }
                         dst[i] += g[0] * dl * inv_n;
                       }
                     });
}

}  // namespace adrf
