#pragma once

#include "adrf/tensor.hpp"

#include <string_view>

namespace adrf {

enum class LossKind { mse, mae, mse_mae, bce };

LossKind parse_loss_kind(std::string_view name);

/// Scalar loss averaged over all elements. Prediction and target must share a
/// shape; for bce every prediction must lie strictly inside (0, 1) and
/// targets in [0, 1]. Gradients flow to the prediction only.
Tensor loss(LossKind kind, const Tensor& prediction, const Tensor& target);

inline Tensor mse_loss(const Tensor& p, const Tensor& t) { return loss(LossKind::mse, p, t); }
inline Tensor mae_loss(const Tensor& p, const Tensor& t) { return loss(LossKind::mae, p, t); }
inline Tensor bce_loss(const Tensor& p, const Tensor& t) { return loss(LossKind::bce, p, t); }

}  // namespace adrf
