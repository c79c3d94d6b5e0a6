// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "polyapprox/error.hpp"
#include "polyapprox/ops.hpp"
#include "polyapprox/rng.hpp"
#include "polyapprox/tensor.hpp"

namespace polyapprox {

struct Conv2D {
  std::size_t kernels = 0;
  std::size_t kh = 0;
  std::size_t kw = 0;
  std::size_t pad = 0;  // zero border added before the valid correlation
};
struct AvgPool2 {};
struct Dense {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
};
enum class ActivationFn { sigmoid, relu };
struct Activation {
  ActivationFn fn = ActivationFn::sigmoid;
};
struct Softmax {};
struct Flatten {};

using Layer = std::variant<Conv2D, AvgPool2, Dense, Activation, Softmax, Flatten>;

enum class Loss { cross_entropy, mean_squared_error };

inline bool has_weights(const Layer& layer) {
  return std::holds_alternative<Conv2D>(layer) || std::holds_alternative<Dense>(layer);
}

inline std::string layer_name(const Layer& layer) {
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Conv2D>) {
          return "conv" + std::to_string(l.kh) + "x" + std::to_string(l.kw) + "x" +
                 std::to_string(l.kernels);
        } else if constexpr (std::is_same_v<T, AvgPool2>) {
          return "avgpool2";
        } else if constexpr (std::is_same_v<T, Dense>) {
          return "dense" + std::to_string(l.n_in) + "-" + std::to_string(l.n_out);
        } else if constexpr (std::is_same_v<T, Activation>) {
          return l.fn == ActivationFn::sigmoid ? "sigmoid" : "relu";
        } else if constexpr (std::is_same_v<T, Softmax>) {
          return "softmax";
        } else {
          return "flatten";
        }
      },
      layer);
}

/// An ordered layer stack with its shapes resolved at construction.
class NetworkSpec {
 public:
  NetworkSpec() = default;

  NetworkSpec(Shape input, std::vector<Layer> layers, std::string name = {})
      : name_(std::move(name)), input_(std::move(input)), layers_(std::move(layers)) {
    if (input_.empty()) {
      throw Error(errc::kShapeMismatch, "network input shape is empty");
    }
    Shape cur = input_;
    shapes_.push_back(cur);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      cur = resolve(i, layers_[i], cur);
      shapes_.push_back(cur);
      if (has_weights(layers_[i])) param_layers_.push_back(i);
    }
  }

  const std::string& name() const noexcept { return name_; }
  const Shape& input_shape() const noexcept { return input_; }
  const Shape& output_shape() const noexcept { return shapes_.back(); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Shape& layer_input_shape(std::size_t i) const { return shapes_.at(i); }
  const Shape& layer_output_shape(std::size_t i) const { return shapes_.at(i + 1); }

  /// Indices (into layers()) of the layers that carry weights, in order.
  const std::vector<std::size_t>& parametric_layers() const noexcept {
    return param_layers_;
  }

  const Layer& parametric_layer(std::size_t p) const {
    return layers_.at(param_layers_.at(p));
  }

  bool is_conv(std::size_t p) const {
    return std::holds_alternative<Conv2D>(parametric_layer(p));
  }

  Shape weight_shape(std::size_t p) const {
    const std::size_t li = param_layers_.at(p);
    if (const auto* c = std::get_if<Conv2D>(&layers_[li])) {
      return {c->kh, c->kw, shapes_[li][2], c->kernels};
    }
    const auto& d = std::get<Dense>(layers_[li]);
    return {d.n_out, d.n_in};
  }

  std::size_t bias_size(std::size_t p) const {
    const Shape s = weight_shape(p);
    return is_conv(p) ? s[3] : s[0];
  }

  std::size_t weight_count() const {
    std::size_t n = 0;
    for (std::size_t p = 0; p < param_layers_.size(); ++p) n += shape_size(weight_shape(p));
    return n;
  }

 private:
  static Shape resolve(std::size_t i, const Layer& layer, const Shape& in) {
    auto fail = [&](const std::string& why) {
      return Error(errc::kShapeMismatch, "layer " + std::to_string(i) + " (" +
                                             layer_name(layer) + "): " + why +
                                             ", input " + shape_string(in));
    };
    return std::visit(
        [&](const auto& l) -> Shape {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, Conv2D>) {
            if (in.size() != 3) throw fail("needs H x W x C input");
            if (l.kernels == 0 || l.kh == 0 || l.kw == 0) throw fail("zero-sized kernel");
            const std::size_t H = in[0] + 2 * l.pad, W = in[1] + 2 * l.pad;
            if (l.kh > H || l.kw > W) throw fail("kernel larger than input");
            return {H - l.kh + 1, W - l.kw + 1, l.kernels};
          } else if constexpr (std::is_same_v<T, AvgPool2>) {
            if (in.size() != 3) throw fail("needs H x W x C input");
            if (in[0] % 2 || in[1] % 2) throw fail("odd spatial dims");
            return {in[0] / 2, in[1] / 2, in[2]};
          } else if constexpr (std::is_same_v<T, Dense>) {
            if (in.size() != 1 || in[0] != l.n_in) {
              throw fail("expects a flat vector of " + std::to_string(l.n_in));
            }
            if (l.n_out == 0) throw fail("zero outputs");
            return {l.n_out};
          } else if constexpr (std::is_same_v<T, Flatten>) {
            return {shape_size(in)};
          } else {
            return in;
          }
        },
        layer);
  }

  std::string name_;
  Shape input_;
  std::vector<Layer> layers_;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> param_layers_;
};

struct LayerParams {
  Tensor weights;
  std::vector<double> bias;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// One LayerParams per parametric layer. `version` is bumped by every
/// library mutation so stale forward caches can be detected; callers that
/// edit weights in place must call touch().
struct Parameters {
  std::vector<LayerParams> layers;
  std::uint64_t version = 0;

  void touch() { ++version; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }

  bool same_values(const Parameters& o) const { return layers == o.layers; }
};

using Gradients = std::vector<LayerParams>;

inline Parameters zero_parameters(const NetworkSpec& net) {
  Parameters p;
  for (std::size_t i = 0; i < net.parametric_layers().size(); ++i) {
    p.layers.push_back({Tensor(net.weight_shape(i)),
                        std::vector<double>(net.bias_size(i), 0.0)});
  }
  return p;
}

/// Uniform in [-r, r], r = sqrt(6 / (fan_in + fan_out)); zero biases.
inline Parameters init_parameters(const NetworkSpec& net, std::uint64_t seed) {
  Rng rng(seed);
  Parameters p = zero_parameters(net);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const Shape s = net.weight_shape(i);
    double fan_in, fan_out;
    if (net.is_conv(i)) {
      fan_in = static_cast<double>(s[0] * s[1] * s[2]);
      fan_out = static_cast<double>(s[0] * s[1] * s[3]);
    } else {
      fan_in = static_cast<double>(s[1]);
      fan_out = static_cast<double>(s[0]);
    }
    const double r = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : p.layers[i].weights.values()) w = rng.uniform(-r, r);
  }
  return p;
}

inline Gradients zero_gradients(const NetworkSpec& net) {
  return zero_parameters(net).layers;
}

inline void check_parameters(const NetworkSpec& net, const Parameters& params) {
  if (params.layers.size() != net.parametric_layers().size()) {
    throw Error(errc::kShapeMismatch,
                "parameter set has " + std::to_string(params.layers.size()) +
                    " layers, network expects " +
                    std::to_string(net.parametric_layers().size()));
  }
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    if (params.layers[i].weights.shape() != net.weight_shape(i) ||
        params.layers[i].bias.size() != net.bias_size(i)) {
      throw Error(errc::kShapeMismatch,
                  "parametric layer " + std::to_string(i) + " has weights " +
                      shape_string(params.layers[i].weights.shape()) + ", expected " +
                      shape_string(net.weight_shape(i)));
    }
  }
}

/// Activations retained by forward(): inputs[i] is the input of layer i and
/// inputs.back() the network output.
struct ForwardCache {
  std::vector<Tensor> inputs;
  const Parameters* params = nullptr;
  std::uint64_t version = 0;
  std::size_t layer_count = 0;
};

struct ForwardResult {
  Tensor output;
  ForwardCache cache;
};

namespace detail {

inline Tensor layer_forward(const Layer& layer, const Tensor& x,
                            const LayerParams* lp, const Shape& out_shape) {
  return std::visit(
      [&](const auto& l) -> Tensor {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Conv2D>) {
          Tensor y = conv2d_valid(pad2d(x, l.pad), lp->weights);
          const std::size_t K = l.kernels;
          for (std::size_t i = 0; i < y.size(); ++i) y[i] += lp->bias[i % K];
          return y;
        } else if constexpr (std::is_same_v<T, AvgPool2>) {
          return avg_pool2(x);
        } else if constexpr (std::is_same_v<T, Dense>) {
          return dense(x, lp->weights, lp->bias);
        } else if constexpr (std::is_same_v<T, Activation>) {
          return l.fn == ActivationFn::sigmoid ? sigmoid(x) : relu(x);
        } else if constexpr (std::is_same_v<T, Softmax>) {
          return softmax(x);
        } else {
          return x.reshaped(out_shape);
        }
      },
      layer);
}

}  // namespace detail

inline ForwardResult forward(const NetworkSpec& net, const Parameters& params,
                             const Tensor& x) {
  if (x.shape() != net.input_shape()) {
    throw Error(errc::kShapeMismatch, "forward: input " + shape_string(x.shape()) +
                                          " does not match network input " +
                                          shape_string(net.input_shape()));
  }
  check_parameters(net, params);
  ForwardResult res;
  res.cache.inputs.reserve(net.layers().size() + 1);
  res.cache.inputs.push_back(x);
  std::size_t p = 0;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Layer& layer = net.layers()[i];
    const LayerParams* lp = has_weights(layer) ? &params.layers[p++] : nullptr;
    res.cache.inputs.push_back(detail::layer_forward(
        layer, res.cache.inputs.back(), lp, net.layer_output_shape(i)));
  }
  res.output = res.cache.inputs.back();
  res.cache.params = &params;
  res.cache.version = params.version;
  res.cache.layer_count = net.layers().size();
  return res;
}

/// Network output only; nothing is cached.
inline Tensor predict(const NetworkSpec& net, const Parameters& params, const Tensor& x) {
  if (x.shape() != net.input_shape()) {
    throw Error(errc::kShapeMismatch, "predict: input " + shape_string(x.shape()) +
                                          " does not match network input " +
                                          shape_string(net.input_shape()));
  }
  Tensor cur = x;
  std::size_t p = 0;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Layer& layer = net.layers()[i];
    const LayerParams* lp = has_weights(layer) ? &params.layers[p++] : nullptr;
    cur = detail::layer_forward(layer, cur, lp, net.layer_output_shape(i));
  }
  return cur;
}

inline bool ends_with_softmax(const NetworkSpec& net) {
  return !net.layers().empty() && std::holds_alternative<Softmax>(net.layers().back());
}

inline double log_sum_exp(std::span<const double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return mx + std::log(s);
}

/// Per-example loss. Cross-entropy after a final softmax is evaluated from
/// the softmax input through log-sum-exp.
inline double example_loss(const NetworkSpec& net, const ForwardCache& cache,
                           const Tensor& target, Loss loss) {
  const Tensor& y = cache.inputs.back();
  require_same_shape(y, target, "loss target");
  if (loss == Loss::mean_squared_error) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - target[i];
      s += d * d;
    }
    return s;
  }
  if (ends_with_softmax(net)) {
    const Tensor& z = cache.inputs[cache.inputs.size() - 2];
    const double lse = log_sum_exp(z.data());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (target[i] != 0.0) s -= target[i] * (z[i] - lse);
    }
    return s;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (target[i] != 0.0) s -= target[i] * std::log(y[i]);
  }
  return s;
}

/// Gradient of example_loss with respect to every parameter, accumulated
/// into `grads` (scaled by `scale`).
inline void backward_accumulate(const NetworkSpec& net, const Parameters& params,
                                const ForwardCache& cache, const Tensor& target,
                                Loss loss, Gradients& grads, double scale = 1.0) {
  if (cache.params != &params || cache.version != params.version ||
      cache.layer_count != net.layers().size() ||
      cache.inputs.size() != net.layers().size() + 1) {
    throw Error(errc::kStaleCache,
                "backward: cache does not belong to these parameters (weights "
                "changed or different network since forward)");
  }
  const Tensor& y = cache.inputs.back();
  require_same_shape(y, target, "backward target");
  std::size_t li = net.layers().size();
  Tensor g(y.shape());
  if (loss == Loss::cross_entropy && ends_with_softmax(net)) {
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = scale * (y[i] - target[i]);
    --li;  // softmax folded into the gradient above
  } else if (loss == Loss::cross_entropy) {
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = -scale * target[i] / y[i];
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = scale * 2.0 * (y[i] - target[i]);
  }

  std::size_t p = 0;
  for (std::size_t i = 0; i < li; ++i) p += has_weights(net.layers()[i]) ? 1 : 0;

  while (li-- > 0) {
    const Layer& layer = net.layers()[li];
    const Tensor& in = cache.inputs[li];
    const Tensor& out = cache.inputs[li + 1];
    const bool need_input_grad = li > 0;
    if (const auto* conv = std::get_if<Conv2D>(&layer)) {
      --p;
      LayerParams& gl = grads[p];
      const std::size_t K = params.layers[p].weights.dim(3);
      for (std::size_t i = 0; i < g.size(); ++i) gl.bias[i % K] += g[i];
      const Tensor padded = pad2d(in, conv->pad);
      Tensor din(padded.shape());
      conv2d_valid_backward(padded, params.layers[p].weights, g, gl.weights,
                            need_input_grad ? &din : nullptr);
      g = crop2d(din, conv->pad);
    } else if (std::holds_alternative<Dense>(layer)) {
      --p;
      LayerParams& gl = grads[p];
      Tensor din(in.shape());
      dense_backward(in, params.layers[p].weights, g, gl.weights, gl.bias,
                     need_input_grad ? &din : nullptr);
      g = std::move(din);
    } else if (std::holds_alternative<AvgPool2>(layer)) {
      g = avg_pool2_backward(g, in.shape());
    } else if (const auto* act = std::get_if<Activation>(&layer)) {
      if (act->fn == ActivationFn::sigmoid) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= out[i] * (1.0 - out[i]);
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = out[i] > 0.0 ? g[i] : 0.0;
      }
    } else if (std::holds_alternative<Softmax>(layer)) {
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * out[i];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = out[i] * (g[i] - dot);
    } else {
      g = g.reshaped(in.shape());
    }
  }
}

inline Gradients backward(const NetworkSpec& net, const Parameters& params,
                          const ForwardCache& cache, const Tensor& target,
                          Loss loss = Loss::cross_entropy) {
  Gradients grads = zero_gradients(net);
  backward_accumulate(net, params, cache, target, loss, grads);
  return grads;
}

inline void sgd_step(Parameters& params, const Gradients& grads, double lr) {
  if (grads.size() != params.layers.size()) {
    throw Error(errc::kShapeMismatch, "sgd_step: gradient layer count mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    require_same_shape(params.layers[i].weights, grads[i].weights, "sgd_step");
    sgd_step(params.layers[i].weights.data(), grads[i].weights.data(), lr);
    sgd_step(params.layers[i].bias, grads[i].bias, lr);
  }
  params.touch();
}

inline Tensor one_hot(std::size_t label, std::size_t classes) {
  Tensor t({classes});
  t[label] = 1.0;
  return t;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace polyapprox
