#pragma once

#include "adrf/tensor.hpp"

#include <cstddef>
#include <vector>

namespace adrf {

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise. `b` either matches `a` exactly or matches a trailing suffix of
// a's shape, in which case it is broadcast over the leading dims.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// slope must lie in (0, 1).
Tensor leaky_relu(const Tensor& x, double slope);

struct Conv2dAttrs {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Output spatial size of a convolution; throws if the window does not fit.
std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride,
                             std::size_t padding);

/// x [N,C,H,W], weight [O,C,K,K], bias [O] -> [N,O,H',W'] with zero padding.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dAttrs attrs);

/// Nearest-neighbour upsampling of the two trailing dims of an [N,C,H,W] tensor.
Tensor upsample_nearest(const Tensor& x, std::size_t factor);

Tensor reshape(const Tensor& x, Shape shape);
/// [N, ...] -> [N, prod(...)]
Tensor flatten(const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Slice of `length` entries starting at `start` along `axis`.
Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

}  // namespace adrf
