// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "polyapprox/error.hpp"
#include "polyapprox/tensor.hpp"

namespace polyapprox {

namespace detail {

inline void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw Error(errc::kShapeMismatch, std::string(what) + ": expected rank " +
                                          std::to_string(rank) + ", got " +
                                          shape_string(t.shape()));
  }
}

}  // namespace detail

/// Valid (no padding, stride 1) cross-correlation.
/// ifmap H x W x C, kernels kh x kw x C x K -> (H-kh+1) x (W-kw+1) x K.
inline Tensor conv2d_valid(const Tensor& ifmap, const Tensor& kernels) {
  detail::require_rank(ifmap, 3, "conv2d_valid ifmap");
  detail::require_rank(kernels, 4, "conv2d_valid kernels");
  const std::size_t H = ifmap.dim(0), W = ifmap.dim(1), C = ifmap.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), K = kernels.dim(3);
  if (kernels.dim(2) != C) {
    throw Error(errc::kShapeMismatch,
                "conv2d_valid: kernel channels " + std::to_string(kernels.dim(2)) +
                    " != ifmap channels " + std::to_string(C));
  }
  if (kh > H || kw > W) {
    throw Error(errc::kShapeMismatch, "conv2d_valid: kernel " +
                                          shape_string(kernels.shape()) +
                                          " larger than ifmap " +
                                          shape_string(ifmap.shape()));
  }
  const std::size_t OH = H - kh + 1, OW = W - kw + 1;
  Tensor out({OH, OW, K});
  const double* in = ifmap.data().data();
  const double* w = kernels.data().data();
  double* o = out.data().data();
  for (std::size_t r = 0; r < OH; ++r) {
    for (std::size_t c = 0; c < OW; ++c) {
      double* acc = o + (r * OW + c) * K;
      for (std::size_t i = 0; i < kh; ++i) {
        for (std::size_t j = 0; j < kw; ++j) {
          const double* px = in + ((r + i) * W + (c + j)) * C;
          const double* wrow = w + (i * kw + j) * C * K;
          for (std::size_t ch = 0; ch < C; ++ch) {
            const double v = px[ch];
            const double* wk = wrow + ch * K;
            for (std::size_t k = 0; k < K; ++k) acc[k] += v * wk[k];
          }
        }
      }
    }
  }
  return out;
}

// Accumulates kernel gradients into dkernels and, when dinput is non-null,
// input gradients into *dinput.
inline void conv2d_valid_backward(const Tensor& ifmap, const Tensor& kernels,
                                  const Tensor& dout, Tensor& dkernels,
                                  Tensor* dinput) {
  const std::size_t W = ifmap.dim(1), C = ifmap.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), K = kernels.dim(3);
  const std::size_t OH = dout.dim(0), OW = dout.dim(1);
  const double* in = ifmap.data().data();
  const double* w = kernels.data().data();
  const double* g = dout.data().data();
  double* dw = dkernels.data().data();
  double* din = dinput ? dinput->data().data() : nullptr;
  for (std::size_t r = 0; r < OH; ++r) {
    for (std::size_t c = 0; c < OW; ++c) {
      const double* gk = g + (r * OW + c) * K;
      for (std::size_t i = 0; i < kh; ++i) {
        for (std::size_t j = 0; j < kw; ++j) {
          const std::size_t pix = ((r + i) * W + (c + j)) * C;
          const std::size_t wbase = (i * kw + j) * C * K;
          for (std::size_t ch = 0; ch < C; ++ch) {
            const double v = in[pix + ch];
            double* dwk = dw + wbase + ch * K;
            for (std::size_t k = 0; k < K; ++k) dwk[k] += v * gk[k];
            if (din) {
              const double* wk = w + wbase + ch * K;
              double s = 0.0;
              for (std::size_t k = 0; k < K; ++k) s += wk[k] * gk[k];
              din[pix + ch] += s;
            }
          }
        }
      }
    }
  }
}

/// Zero border of `pad` pixels on both spatial axes.
inline Tensor pad2d(const Tensor& x, std::size_t pad) {
  if (pad == 0) return x;
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  Tensor out({H + 2 * pad, W + 2 * pad, C});
  for (std::size_t r = 0; r < H; ++r) {
    const double* src = x.data().data() + r * W * C;
    double* dst = out.data().data() + ((r + pad) * (W + 2 * pad) + pad) * C;
    std::copy(src, src + W * C, dst);
  }
  return out;
}

inline Tensor crop2d(const Tensor& x, std::size_t pad) {
  if (pad == 0) return x;
  const std::size_t H = x.dim(0) - 2 * pad, W = x.dim(1) - 2 * pad, C = x.dim(2);
  Tensor out({H, W, C});
  for (std::size_t r = 0; r < H; ++r) {
    const double* src = x.data().data() + ((r + pad) * x.dim(1) + pad) * C;
    std::copy(src, src + W * C, out.data().data() + r * W * C);
  }
  return out;
}

/// 2x2 mean pooling with stride 2 on H x W x C; H and W must be even.
inline Tensor avg_pool2(const Tensor& x) {
  detail::require_rank(x, 3, "avg_pool2");
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  if (H % 2 || W % 2) {
    throw Error(errc::kShapeMismatch,
                "avg_pool2: spatial dims must be even, got " + shape_string(x.shape()));
  }
  Tensor out({H / 2, W / 2, C});
  for (std::size_t r = 0; r < H / 2; ++r) {
    for (std::size_t c = 0; c < W / 2; ++c) {
      for (std::size_t ch = 0; ch < C; ++ch) {
        out.at(r, c, ch) = 0.25 * (x.at(2 * r, 2 * c, ch) + x.at(2 * r, 2 * c + 1, ch) +
                                   x.at(2 * r + 1, 2 * c, ch) +
                                   x.at(2 * r + 1, 2 * c + 1, ch));
      }
    }
  }
  return out;
}

inline Tensor avg_pool2_backward(const Tensor& dout, const Shape& input_shape) {
  Tensor din(input_shape);
  const std::size_t OH = dout.dim(0), OW = dout.dim(1), C = dout.dim(2);
  for (std::size_t r = 0; r < OH; ++r) {
    for (std::size_t c = 0; c < OW; ++c) {
      for (std::size_t ch = 0; ch < C; ++ch) {
        const double g = 0.25 * dout.at(r, c, ch);
        din.at(2 * r, 2 * c, ch) = g;
        din.at(2 * r, 2 * c + 1, ch) = g;
        din.at(2 * r + 1, 2 * c, ch) = g;
        din.at(2 * r + 1, 2 * c + 1, ch) = g;
      }
    }
  }
  return din;
}

/// y = W x + b with W stored n_out x n_in.
inline Tensor dense(const Tensor& x, const Tensor& weights,
                    std::span<const double> bias) {
  detail::require_rank(weights, 2, "dense weights");
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  if (x.size() != n) {
    throw Error(errc::kShapeMismatch, "dense: input length " + std::to_string(x.size()) +
                                          " != n_in " + std::to_string(n));
  }
  Tensor y({m});
  const double* w = weights.data().data();
  const double* xv = x.data().data();
  for (std::size_t o = 0; o < m; ++o) {
    const double* row = w + o * n;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += row[i] * xv[i];
    y[o] = s + (bias.empty() ? 0.0 : bias[o]);
  }
  return y;
}

inline void dense_backward(const Tensor& x, const Tensor& weights,
                           const Tensor& dout, Tensor& dweights,
                           std::span<double> dbias, Tensor* dinput) {
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  const double* w = weights.data().data();
  const double* xv = x.data().data();
  double* dw = dweights.data().data();
  double* din = dinput ? dinput->data().data() : nullptr;
  for (std::size_t o = 0; o < m; ++o) {
    const double g = dout[o];
    if (!dbias.empty()) dbias[o] += g;
    double* drow = dw + o * n;
    for (std::size_t i = 0; i < n; ++i) drow[i] += g * xv[i];
    if (din) {
      const double* row = w + o * n;
      for (std::size_t i = 0; i < n; ++i) din[i] += g * row[i];
    }
  }
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = sigmoid(v);
  return y;
}

inline Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

/// Numerically stable softmax over all entries.
inline Tensor softmax(const Tensor& x) {
  Tensor y = x;
  const double mx = *std::max_element(y.values().begin(), y.values().end());
  double s = 0.0;
  for (double& v : y.values()) {
    v = std::exp(v - mx);
    s += v;
  }
  for (double& v : y.values()) v /= s;
  return y;
}

/// w' = w - lr * g, elementwise.
inline void sgd_step(std::span<double> weights, std::span<const double> grads,
                     double lr) {
  if (weights.size() != grads.size()) {
    throw Error(errc::kShapeMismatch, "sgd_step: " + std::to_string(weights.size()) +
                                          " weights vs " + std::to_string(grads.size()) +
                                          " gradients");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] -= lr * grads[i];
}

inline Tensor sgd_step(const Tensor& weights, const Tensor& grads, double lr) {
  require_same_shape(weights, grads, "sgd_step");
  Tensor out = weights;
  sgd_step(out.data(), grads.data(), lr);
  return out;
}

}  // namespace polyapprox
