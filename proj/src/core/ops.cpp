#include "adrf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adrf {

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

void accumulate(Tensor t, std::span<const double> g) {
  if (!t.requires_grad()) return;
  auto dst = t.mutable_grad();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

// Number of times `b` repeats inside `a` under suffix broadcasting.
std::size_t broadcast_outer(const Tensor& a, const Tensor& b, const char* op) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sb.size() <= sa.size() && std::equal(sb.rbegin(), sb.rend(), sa.rbegin())) {
    return a.numel() / b.numel();
  }
  throw ContractViolation(std::string(op) + ": shape " + shape_string(sb) +
                          " cannot broadcast onto " + shape_string(sa));
}

template <class Fwd, class GradA, class GradB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, GradA ga, GradB gb) {
  const std::size_t outer = broadcast_outer(a, b, op);
  const std::size_t inner = b.numel();
  auto av = a.data();
  auto bv = b.data();
  std::vector<double> out(a.numel());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] = fwd(av[o * inner + i], bv[i]);
  }
  return make_result(op, a.shape(), std::move(out), {a, b},
                     [a, b, outer, inner, ga, gb](std::span<const double> g) {
                       auto av = a.data();
                       auto bv = b.data();
                       if (a.requires_grad()) {
                         std::vector<double> da(a.numel());
                         for (std::size_t k = 0; k < da.size(); ++k) {
                           da[k] = g[k] * ga(av[k], bv[k % inner]);
                         }
                         accumulate(a, da);
                       }
                       if (b.requires_grad()) {
                         std::vector<double> db(inner, 0.0);
                         for (std::size_t o = 0; o < outer; ++o) {
                           for (std::size_t i = 0; i < inner; ++i) {
                             const std::size_t k = o * inner + i;
                             db[i] += g[k] * gb(av[k], bv[i]);
                           }
                         }
                         accumulate(b, db);
                       }
                     });
}

template <class Fwd, class Deriv>
Tensor unary(const char* op, const Tensor& x, Fwd fwd, Deriv deriv) {
  auto xv = x.data();
  std::vector<double> out(xv.size());
  std::transform(xv.begin(), xv.end(), out.begin(), fwd);
  // deriv(x, y) gets both input and output so saturating functions reuse y.
  auto saved = std::make_shared<std::vector<double>>(out);
  return make_result(op, x.shape(), std::move(out), {x}, [x, saved, deriv](std::span<const double> g) {
    auto xv = x.data();
    std::vector<double> dx(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) dx[k] = g[k] * deriv(xv[k], (*saved)[k]);
    accumulate(x, dx);
  });
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ContractViolation(std::string(op) + ": expected rank " + std::to_string(rank) +
                            ", got " + shape_string(t.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ContractViolation("matmul: inner dims differ " + shape_string(a.shape()) + " x " +
                            shape_string(b.shape()));
  }
  const auto m = a.dim(0), n = b.dim(1);
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() = a.matrix() * b.matrix();
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [a, b, m, n](std::span<const double> g) {
    ConstMap gm(g.data(), m, n);
    if (a.requires_grad()) {
      RowMatrix da = gm * b.matrix().transpose();
      accumulate(a, {da.data(), static_cast<std::size_t>(da.size())});
    }
    if (b.requires_grad()) {
      RowMatrix db = a.matrix().transpose() * gm;
      accumulate(b, {db.data(), static_cast<std::size_t>(db.size())});
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw ContractViolation("leaky_relu: slope must be in (0,1), got " + std::to_string(slope));
  }
  return unary(
      "leaky_relu", x, [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride,
                             std::size_t padding) {
  if (stride < 1) throw ContractViolation("conv: stride must be >= 1");
  if (in + 2 * padding < kernel) {
    throw ContractViolation("conv: kernel " + std::to_string(kernel) + " larger than padded input " +
                            std::to_string(in + 2 * padding));
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dAttrs attrs) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = weight.dim(0), K = weight.dim(2);
  if (weight.dim(1) != C || weight.dim(3) != K) {
    throw ContractViolation("conv2d: weight " + shape_string(weight.shape()) +
                            " incompatible with input " + shape_string(x.shape()));
  }
  if (bias.numel() != O) throw ContractViolation("conv2d: bias length must equal output channels");
  const std::size_t s = attrs.stride, p = attrs.padding;
  const std::size_t Ho = conv_output_size(H, K, s, p);
  const std::size_t Wo = conv_output_size(W, K, s, p);
  const std::size_t ckk = C * K * K, hw = Ho * Wo;

  // im2col per image, kept for the weight gradient.
  auto cols = std::make_shared<std::vector<double>>(N * ckk * hw, 0.0);
  auto xv = x.data();
  for (std::size_t n = 0; n < N; ++n) {
    double* col = cols->data() + n * ckk * hw;
    for (std::size_t c = 0; c < C; ++c) {
      const double* img = xv.data() + (n * C + c) * H * W;
      for (std::size_t ki = 0; ki < K; ++ki) {
        for (std::size_t kj = 0; kj < K; ++kj) {
          double* row = col + ((c * K + ki) * K + kj) * hw;
          for (std::size_t oy = 0; oy < Ho; ++oy) {
            const long iy = static_cast<long>(oy * s + ki) - static_cast<long>(p);
            if (iy < 0 || iy >= static_cast<long>(H)) continue;
            for (std::size_t ox = 0; ox < Wo; ++ox) {
              const long ix = static_cast<long>(ox * s + kj) - static_cast<long>(p);
              if (ix < 0 || ix >= static_cast<long>(W)) continue;
              row[oy * Wo + ox] = img[iy * W + ix];
            }
          }
        }
      }
    }
  }

  ConstMap wm(weight.data().data(), O, ckk);
  Eigen::Map<const Eigen::VectorXd> bv(bias.data().data(), O);
  std::vector<double> out(N * O * hw);
  for (std::size_t n = 0; n < N; ++n) {
    MutMap om(out.data() + n * O * hw, O, hw);
    om.noalias() = wm * ConstMap(cols->data() + n * ckk * hw, ckk, hw);
    om.colwise() += bv;
  }

  return make_result(
      "conv2d", {N, O, Ho, Wo}, std::move(out), {x, weight, bias},
      [x, weight, bias, cols, N, C, H, W, O, K, s, p, Ho, Wo, ckk, hw](std::span<const double> g) {
        ConstMap wm(weight.data().data(), O, ckk);
        if (weight.requires_grad() || bias.requires_grad()) {
          RowMatrix dw = RowMatrix::Zero(O, ckk);
          Eigen::VectorXd db = Eigen::VectorXd::Zero(O);
          for (std::size_t n = 0; n < N; ++n) {
            ConstMap gm(g.data() + n * O * hw, O, hw);
            dw.noalias() += gm * ConstMap(cols->data() + n * ckk * hw, ckk, hw).transpose();
            for (std::size_t o = 0; o < O; ++o) {
              const double* row = g.data() + (n * O + o) * hw;
              double acc = 0.0;
              for (std::size_t i = 0; i < hw; ++i) acc += row[i];
              db[static_cast<Eigen::Index>(o)] += acc;
            }
          }
          accumulate(weight, {dw.data(), static_cast<std::size_t>(dw.size())});
          accumulate(bias, {db.data(), static_cast<std::size_t>(db.size())});
        }
        if (x.requires_grad()) {
          std::vector<double> dx(N * C * H * W, 0.0);
          RowMatrix dcol(ckk, hw);
          for (std::size_t n = 0; n < N; ++n) {
            dcol.noalias() = wm.transpose() * ConstMap(g.data() + n * O * hw, O, hw);
            for (std::size_t c = 0; c < C; ++c) {
              double* img = dx.data() + (n * C + c) * H * W;
              for (std::size_t ki = 0; ki < K; ++ki) {
                for (std::size_t kj = 0; kj < K; ++kj) {
                  const double* row = dcol.data() + ((c * K + ki) * K + kj) * hw;
                  for (std::size_t oy = 0; oy < Ho; ++oy) {
                    const long iy = static_cast<long>(oy * s + ki) - static_cast<long>(p);
                    if (iy < 0 || iy >= static_cast<long>(H)) continue;
                    for (std::size_t ox = 0; ox < Wo; ++ox) {
                      const long ix = static_cast<long>(ox * s + kj) - static_cast<long>(p);
                      if (ix < 0 || ix >= static_cast<long>(W)) continue;
                      img[iy * W + ix] += row[oy * Wo + ox];
                    }
                  }
                }
              }
            }
          }
          accumulate(x, dx);
        }
      });
}

Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  require_rank(x, 4, "upsample_nearest");
  if (factor < 1) throw ContractViolation("upsample_nearest: factor must be >= 1");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t Ho = H * factor, Wo = W * factor;
  auto xv = x.data();
  std::vector<double> out(N * C * Ho * Wo);
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    for (std::size_t y = 0; y < Ho; ++y) {
      for (std::size_t xx = 0; xx < Wo; ++xx) {
        out[(nc * Ho + y) * Wo + xx] = xv[(nc * H + y / factor) * W + xx / factor];
      }
    }
  }
  return make_result("upsample_nearest", {N, C, Ho, Wo}, std::move(out), {x},
                     [x, N, C, H, W, Ho, Wo, factor](std::span<const double> g) {
                       std::vector<double> dx(N * C * H * W, 0.0);
                       for (std::size_t nc = 0; nc < N * C; ++nc) {
                         for (std::size_t y = 0; y < Ho; ++y) {
                           for (std::size_t xx = 0; xx < Wo; ++xx) {
                             dx[(nc * H + y / factor) * W + xx / factor] +=
                                 g[(nc * Ho + y) * Wo + xx];
                           }
                         }
                       }
                       accumulate(x, dx);
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ContractViolation("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape) +
                            " changes element count");
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {x},
                     [x](std::span<const double> g) { accumulate(x, g); });
}

Tensor flatten(const Tensor& x) {
  const std::size_t n = x.dim(0);
  return reshape(x, {n, x.numel() / n});
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractViolation("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ContractViolation("concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& t : parts) {
    const Shape& s = t.shape();
    if (s.size() != first.size()) throw ContractViolation("concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) {
        throw ContractViolation("concat: shape mismatch " + shape_string(s) + " vs " +
                                shape_string(first));
      }
    }
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  const std::size_t out_stride = out_shape[axis] * inner;

  std::vector<double> out(shape_numel(out_shape));
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (const auto& t : parts) {
    offsets.push_back(offset);
    const std::size_t block = t.dim(axis) * inner;
    auto v = t.data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(v.data() + o * block, block, out.data() + o * out_stride + offset);
    }
    offset += block;
  }
  return make_result("concat", std::move(out_shape), std::move(out),
                     std::vector<Tensor>(parts.begin(), parts.end()),
                     [parts, offsets, outer, inner, out_stride, axis](std::span<const double> g) {
                       for (std::size_t k = 0; k < parts.size(); ++k) {
                         if (!parts[k].requires_grad()) continue;
                         const std::size_t block = parts[k].dim(axis) * inner;
                         std::vector<double> d(parts[k].numel());
                         for (std::size_t o = 0; o < outer; ++o) {
                           std::copy_n(g.data() + o * out_stride + offsets[k], block,
                                       d.data() + o * block);
                         }
                         accumulate(parts[k], d);
                       }
                     });
}

Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& s = x.shape();
  if (axis >= s.size() || length == 0 || start + length > s[axis]) {
    throw ContractViolation("narrow: range [" + std::to_string(start) + "," +
                            std::to_string(start + length) + ") invalid on axis " +
                            std::to_string(axis) + " of " + shape_string(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t in_stride = s[axis] * inner, block = length * inner;
  Shape out_shape = s;
  out_shape[axis] = length;
  auto v = x.data();
  std::vector<double> out(outer * block);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(v.data() + o * in_stride + start * inner, block, out.data() + o * block);
  }
  return make_result("narrow", std::move(out_shape), std::move(out), {x},
                     [x, outer, inner, in_stride, block, start](std::span<const double> g) {
                       std::vector<double> d(x.numel(), 0.0);
                       for (std::size_t o = 0; o < outer; ++o) {
                         std::copy_n(g.data() + o * block, block,
                                     d.data() + o * in_stride + start * inner);
                       }
                       accumulate(x, d);
                     });
}

Tensor sum(const Tensor& x) {
  auto v = x.data();
  double total = 0.0;
  for (double e : v) total += e;
  return make_result("sum", {1}, {total}, {x}, [x](std::span<const double> g) {
    accumulate(x, std::vector<double>(x.numel(), g[0]));
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

}  // namespace adrf
