// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "polyapprox/polyapprox.hpp"

namespace testutil {

using namespace polyapprox;

inline Tensor random_tensor(Rng& rng, const Shape& s, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Direct 6-loop correlation with explicit index arithmetic, kept separate
/// from the library kernel.
inline Tensor conv_oracle(const Tensor& x, const Tensor& w) {
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  const std::size_t kh = w.dim(0), kw = w.dim(1), K = w.dim(3);
  Tensor y({H - kh + 1, W - kw + 1, K});
  for (std::size_t r = 0; r + kh <= H; ++r)
    for (std::size_t c = 0; c + kw <= W; ++c)
      for (std::size_t k = 0; k < K; ++k) {
        long double s = 0;
        for (std::size_t i = 0; i < kh; ++i)
          for (std::size_t j = 0; j < kw; ++j)
            for (std::size_t ch = 0; ch < C; ++ch) {
              s += static_cast<long double>(x[((r + i) * W + (c + j)) * C + ch]) *
                   w[((i * kw + j) * C + ch) * K + k];
            }
        y[(r * (W - kw + 1) + c) * K + k] = static_cast<double>(s);
      }
  return y;
}

/// Random coefficients for a layer layout, with exact parts and bias filled.
inline LayerCoeffs random_coeffs(Rng& rng, const Shape& wshape, bool conv, const LayerScheme& s) {
  const GroupLayout layout(wshape, conv, s);
  LayerCoeffs lc;
  lc.weight_shape = wshape;
  lc.conv = conv;
  lc.scheme = s;
  lc.coefficients = random_vec(rng, layout.coefficient_count());
  lc.exact = random_vec(rng, layout.exact_count());
  lc.bias = random_vec(rng, conv ? wshape[3] : wshape[0]);
  return lc;
}

/// 4x4 single-channel images whose label is decided by which quadrant is
/// brightest, plus noise. Learnable by tiny nets in a few epochs.
inline Dataset quadrant_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.image_shape = {4, 4, 1};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t q = rng.below(4);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t quad = (r / 2) * 2 + c / 2;
        d.pixels.push_back(std::min(1.0, (quad == q ? 0.7 : 0.1) + 0.3 * rng.uniform01()));
      }
    d.labels.push_back(static_cast<std::uint8_t>(q));
  }
  return d;
}

inline NetworkSpec tiny_mlp() {
  return NetworkSpec({4, 4, 1},
                     {Flatten{}, Dense{16, 12}, Activation{ActivationFn::sigmoid}, Dense{12, 4},
                      Softmax{}},
                     "tiny_mlp");
}

inline NetworkSpec tiny_cnn() {
  return NetworkSpec({6, 6, 2},
                     {Conv2D{3, 3, 3, 1}, Activation{ActivationFn::sigmoid}, AvgPool2{},
                      Conv2D{2, 3, 3}, Activation{ActivationFn::relu}, Flatten{}, Dense{2, 3},
                      Softmax{}},
                     "tiny_cnn");
}

// Central differences over every parameter; returns the worst relative error
// |fd - analytic| / max(|fd| + |analytic|, 1e-8).
inline double gradient_check(const NetworkSpec& net, Loss loss, std::uint64_t seed) {
  Rng rng(seed);
  Parameters p = init_parameters(net, seed);
  for (auto& l : p.layers)
    for (double& b : l.bias) b = rng.uniform(-0.3, 0.3);
  const Tensor x = random_tensor(rng, net.input_shape(), 0.0, 1.0);
  const std::size_t classes = shape_size(net.output_shape());
  const Tensor target = one_hot(rng.below(classes), classes);
  const ForwardResult fr = forward(net, p, x);
  const Gradients g = backward(net, p, fr.cache, target, loss);
  auto loss_at = [&](const Parameters& q) {
    return example_loss(net, forward(net, q, x).cache, target, loss);
  };
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto check = [&](std::span<double> vals, std::span<const double> grad) {
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const double keep = vals[i];
        vals[i] = keep + h;
        p.touch();
        const double up = loss_at(p);
        vals[i] = keep - h;
        p.touch();
        const double dn = loss_at(p);
        vals[i] = keep;
        p.touch();
        const double fd = (up - dn) / (2 * h);
        worst = std::max(worst, std::abs(fd - grad[i]) / std::max(std::abs(fd) + std::abs(grad[i]), 1e-8));
      }
    };
    check(p.layers[l].weights.values(), g[l].weights.data());
    check(p.layers[l].bias, g[l].bias);
  }
  return worst;
}

}  // namespace testutil
