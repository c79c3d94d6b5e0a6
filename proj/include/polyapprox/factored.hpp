// SPDX-License-Identifier: Apache-2.0
#pragma once

// Inference directly from polynomial coefficients. For a group fitted by
// w(x) = c0 + c1 x + c2 x^2 the dot product with inputs y_x collapses to
// c0 d0 + c1 d1 + c2 d2, d_k = sum_x x^k y_x. The moments depend only on the
// inputs, so one set serves every kernel (conv) or output neuron (dense)
// that shares the grouping, and in conv also every output row that reads
// the same ifmap row.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "polyapprox/cost.hpp"
#include "polyapprox/error.hpp"
#include "polyapprox/network.hpp"
#include "polyapprox/projection.hpp"

namespace polyapprox {

struct ReuseVector {
  int degree = 1;
  std::array<double, kMaxDegree + 1> d{};
};

/// Moments of ys at abscissae 0..n-1, summed left to right.
inline ReuseVector moments(std::span<const double> ys, int degree) {
  ReuseVector r;
  r.degree = degree;
  for (std::size_t x = 0; x < ys.size(); ++x) {
    const double xv = static_cast<double>(x);
    r.d[0] += ys[x];
    if (degree >= 1) r.d[1] += xv * ys[x];
    if (degree >= 2) r.d[2] += (xv * xv) * ys[x];
  }
  return r;
}

/// Operation counts of one layer evaluated through the factored schedule.
/// psum_adders (vertical accumulation of conv PE outputs and the bias) is
/// reported but kept out of add_mult(), as in the array cost model, where
/// partial sums ride the PE chain.
struct OpTrace {
  std::string layer;
  OpCount passes = 1;
  OpCount moment_vectors = 0;
  OpCount moment_adders = 0;
  OpCount pe_evaluations = 0;
  OpCount pe_multipliers = 0;
  OpCount pe_adders = 0;
  OpCount group_reduce_adders = 0;
  OpCount exact_multipliers = 0;
  OpCount exact_adders = 0;
  OpCount psum_adders = 0;
  std::vector<OpCount> pass_add_mult;  // add_mult() per conv column pass

  OpCount add_mult() const {
    return moment_adders + pe_multipliers + pe_adders + group_reduce_adders +
           exact_multipliers + exact_adders;
  }
};

inline nlohmann::json to_json(const OpTrace& t) {
  return {{"layer", t.layer},
          {"passes", t.passes},
          {"moment_vectors", t.moment_vectors},
          {"moment_adders", t.moment_adders},
          {"pe_evaluations", t.pe_evaluations},
          {"pe_multipliers", t.pe_multipliers},
          {"pe_adders", t.pe_adders},
          {"group_reduce_adders", t.group_reduce_adders},
          {"exact_multipliers", t.exact_multipliers},
          {"exact_adders", t.exact_adders},
          {"psum_adders", t.psum_adders},
          {"pass_add_mult", t.pass_add_mult},
          {"add_mult", t.add_mult()}};
}

namespace detail {

struct NullCounter {
  void moment(std::size_t, int) {}
  void pe(int) {}
  void mac(std::size_t) {}
  void reduce(std::size_t) {}
  void psum(std::size_t) {}
  void end_pass() {}
};

class TraceCounter {
 public:
  TraceCounter(OpTrace& t, const CostParams& p) : t_(t), p_(p) {}
  // One moment vector, charged at the nominal group width.
  void moment(std::size_t width, int degree) {
    ++t_.moment_vectors;
    t_.moment_adders += p_.moment_cost(width, degree);
  }
  void pe(int degree) {
    ++t_.pe_evaluations;
    t_.pe_multipliers += degree + 1;
    t_.pe_adders += degree;
  }
  void mac(std::size_t len) {
    t_.exact_multipliers += static_cast<OpCount>(len);
    t_.exact_adders += static_cast<OpCount>(len) - 1;
  }
  void reduce(std::size_t partials) {
    if (partials > 1) t_.group_reduce_adders += static_cast<OpCount>(partials) - 1;
  }
  void psum(std::size_t partials) {
    if (partials > 1) t_.psum_adders += static_cast<OpCount>(partials) - 1;
  }
  void end_pass() {
    const OpCount now = t_.add_mult();
    t_.pass_add_mult.push_back(now - last_);
    last_ = now;
  }

 private:
  OpTrace& t_;
  const CostParams& p_;
  OpCount last_ = 0;
};

inline void check_conv_input(const Tensor& ifmap, const LayerCoeffs& lc) {
  if (!lc.conv || lc.weight_shape.size() != 4) {
    throw Error(errc::kGeometryMismatch, "conv_factored: coefficients are not for a conv layer");
  }
  if (ifmap.rank() != 3 || ifmap.dim(2) != lc.weight_shape[2] ||
      ifmap.dim(0) < lc.weight_shape[0] || ifmap.dim(1) < lc.weight_shape[1]) {
    throw Error(errc::kGeometryMismatch, "conv_factored: ifmap " + shape_string(ifmap.shape()) +
                                             " incompatible with kernels " +
                                             shape_string(lc.weight_shape));
  }
  if (!lc.bias.empty() && lc.bias.size() != lc.weight_shape[3]) {
    throw Error(errc::kGeometryMismatch, "conv_factored: bias length mismatch");
  }
}

inline double pe_eval(const double* c, const ReuseVector& r, int degree) {
  double v = c[0] * r.d[0];
  for (int t = 1; t <= degree; ++t) v += c[t] * r.d[static_cast<std::size_t>(t)];
  return v;
}

enum class ConvMode { plain, incremental };

template <class Counter>
Tensor conv_engine(const Tensor& ifmap, const LayerCoeffs& lc, ConvMode mode, Counter& cnt) {
  check_conv_input(ifmap, lc);
  const GroupLayout layout = lc.layout();
  check_layer_coeffs(lc, layout);
  const std::size_t H = ifmap.dim(0), W = ifmap.dim(1), C = ifmap.dim(2);
  const std::size_t kh = lc.weight_shape[0], kw = lc.weight_shape[1], K = lc.weight_shape[3];
  const std::size_t OH = H - kh + 1, OW = W - kw + 1;
  const LayerScheme& s = lc.scheme;
  const int deg = s.degree;
  const std::size_t ncoef = static_cast<std::size_t>(deg) + 1;
  const Tensor weights = reconstruct_layer(lc, layout);  // verbatim values for exact runs
  const double* in = ifmap.data().data();
  const double* w = weights.data().data();
  auto px = [&](std::size_t h, std::size_t col, std::size_t c) { return in[(h * W + col) * C + c]; };
  auto wt = [&](std::size_t i, std::size_t j, std::size_t c, std::size_t k) {
    return w[((i * kw + j) * C + c) * K + k];
  };
  Tensor out({OH, OW, K});
  auto bias = [&](std::size_t k) { return lc.bias.empty() ? 0.0 : lc.bias[k]; };

  const bool row_fitted = s.enabled() && s.axis == GroupAxis::filter_row &&
                          kw > static_cast<std::size_t>(deg) + 1;
  const bool flat = s.enabled() && s.axis == GroupAxis::contiguous_flat;

  if (row_fitted) {
    // Moments per (ifmap row, channel) for the current column offset.
    std::vector<ReuseVector> D(H * C);
    std::vector<double> ys(kw);
    for (std::size_t col = 0; col < OW; ++col) {
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t c = 0; c < C; ++c) {
          ReuseVector& r = D[h * C + c];
          if (mode == ConvMode::incremental && col > 0) {
            // Slide the window one column: drop y_old at x=0, append y_new at x=kw-1.
            const double y_old = px(h, col - 1, c), y_new = px(h, col + kw - 1, c);
            const double last = static_cast<double>(kw - 1);
            const double d0 = r.d[0], d1 = r.d[1], d2 = r.d[2];
            r.d[0] = d0 - y_old + y_new;
            if (deg >= 1) r.d[1] = d1 - d0 + y_old + last * y_new;
            if (deg >= 2) r.d[2] = d2 - 2.0 * d1 + d0 - y_old + (last * last) * y_new;
          } else {
            for (std::size_t j = 0; j < kw; ++j) ys[j] = px(h, col + j, c);
            r = moments(ys, deg);
          }
          cnt.moment(kw, deg);
        }
      }
      for (std::size_t rr = 0; rr < OH; ++rr) {
        for (std::size_t k = 0; k < K; ++k) {
          double acc = bias(k);
          for (std::size_t i = 0; i < kh; ++i) {
            for (std::size_t c = 0; c < C; ++c) {
              const WeightGroup& g = layout.groups()[(i * C + c) * K + k];
              acc += pe_eval(lc.coefficients.data() + g.slot * ncoef, D[(rr + i) * C + c], deg);
              cnt.pe(deg);
            }
          }
          cnt.psum(kh * C + (lc.bias.empty() ? 0 : 1));
          out.at(rr, col, k) = acc;
        }
      }
      cnt.end_pass();
    }
    return out;
  }

  if (flat) {
    const std::size_t len = kh * kw;
    const std::size_t R = (len + s.group_size - 1) / s.group_size;
    std::vector<ReuseVector> D(C * R);
    std::vector<double> ys;
    for (std::size_t col = 0; col < OW; ++col) {
      for (std::size_t rr = 0; rr < OH; ++rr) {
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t q = 0; q < R; ++q) {
            const WeightGroup& g = layout.groups()[c * K * R + q];
            if (!g.fitted) continue;
            ys.resize(g.length);
            for (std::size_t e = 0; e < g.length; ++e) {
              const std::size_t flat_e = g.start + e;
              ys[e] = px(rr + flat_e / kw, col + flat_e % kw, c);
            }
            D[c * R + q] = moments(ys, deg);
            cnt.moment(s.group_size, deg);
          }
        }
        for (std::size_t k = 0; k < K; ++k) {
          double acc = bias(k);
          for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t q = 0; q < R; ++q) {
              const WeightGroup& g = layout.groups()[(c * K + k) * R + q];
              if (g.fitted) {
                acc += pe_eval(lc.coefficients.data() + g.slot * ncoef, D[c * R + q], deg);
                cnt.pe(deg);
              } else {
                double part = 0.0;
                for (std::size_t e = 0; e < g.length; ++e) {
                  const std::size_t fe = g.start + e;
                  part += wt(fe / kw, fe % kw, c, k) * px(rr + fe / kw, col + fe % kw, c);
                }
                acc += part;
                cnt.mac(g.length);
              }
            }
          }
          cnt.psum(C * R + (lc.bias.empty() ? 0 : 1));
          out.at(rr, col, k) = acc;
        }
      }
      cnt.end_pass();
    }
    return out;
  }

  // Unprojected weights or rows too short to fit: one filter row against
  // one ifmap row per PE, as in the row-stationary mapping.
  for (std::size_t col = 0; col < OW; ++col) {
    for (std::size_t rr = 0; rr < OH; ++rr) {
      for (std::size_t k = 0; k < K; ++k) {
        double acc = bias(k);
        for (std::size_t i = 0; i < kh; ++i) {
          for (std::size_t c = 0; c < C; ++c) {
            double part = 0.0;
            for (std::size_t j = 0; j < kw; ++j) part += wt(i, j, c, k) * px(rr + i, col + j, c);
            acc += part;
            cnt.mac(kw);
          }
        }
        cnt.psum(kh * C + (lc.bias.empty() ? 0 : 1));
        out.at(rr, col, k) = acc;
      }
    }
    cnt.end_pass();
  }
  return out;
}

template <class Counter>
Tensor fc_engine(const Tensor& x, const LayerCoeffs& lc, Counter& cnt) {
  if (lc.conv || lc.weight_shape.size() != 2) {
    throw Error(errc::kGeometryMismatch, "fc_factored: coefficients are not for a dense layer");
  }
  const std::size_t m = lc.weight_shape[0], n = lc.weight_shape[1];
  if (x.size() != n) {
    throw Error(errc::kGeometryMismatch, "fc_factored: input length " + std::to_string(x.size()) +
                                             " != n_in " + std::to_string(n));
  }
  if (!lc.bias.empty() && lc.bias.size() != m) {
    throw Error(errc::kGeometryMismatch, "fc_factored: bias length mismatch");
  }
  const GroupLayout layout = lc.layout();
  check_layer_coeffs(lc, layout);
  const int deg = lc.scheme.degree;
  const std::size_t ncoef = static_cast<std::size_t>(deg) + 1;
  const double* xv = x.data().data();
  Tensor y({m});

  if (!lc.scheme.enabled()) {
    for (std::size_t o = 0; o < m; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += lc.exact[o * n + i] * xv[i];
      cnt.mac(n);
      y[o] = s + (lc.bias.empty() ? 0.0 : lc.bias[o]);
    }
    return y;
  }

  // Every output line is split identically, so line 0 describes the groups.
  const std::size_t G = layout.groups().size() / m;
  std::vector<ReuseVector> D(G);
  for (std::size_t g = 0; g < G; ++g) {
    const WeightGroup& grp = layout.groups()[g];
    if (!grp.fitted) continue;
    D[g] = moments(std::span<const double>(xv + grp.start, grp.length), deg);
    cnt.moment(lc.scheme.group_size, deg);
  }
  for (std::size_t o = 0; o < m; ++o) {
    double s = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      const WeightGroup& grp = layout.groups()[o * G + g];
      double part;
      if (grp.fitted) {
        part = pe_eval(lc.coefficients.data() + grp.slot * ncoef, D[g], deg);
        cnt.pe(deg);
      } else {
        part = 0.0;
        for (std::size_t e = 0; e < grp.length; ++e) {
          part += lc.exact[grp.slot + e] * xv[grp.start + e];
        }
        cnt.mac(grp.length);
      }
      s = g == 0 ? part : s + part;
    }
    cnt.reduce(G);
    y[o] = s + (lc.bias.empty() ? 0.0 : lc.bias[o]);
  }
  return y;
}

}  // namespace detail

using detail::ConvMode;

/// Valid correlation of an (already padded) ifmap with a conv layer held as
/// coefficients, plus bias when present.
inline Tensor conv_factored(const Tensor& ifmap, const LayerCoeffs& lc,
                            ConvMode mode = ConvMode::plain) {
  detail::NullCounter cnt;
  return detail::conv_engine(ifmap, lc, mode, cnt);
}

inline Tensor fc_factored(const Tensor& x, const LayerCoeffs& lc) {
  detail::NullCounter cnt;
  return detail::fc_engine(x, lc, cnt);
}

struct TracedOutput {
  Tensor output;
  OpTrace trace;
};

/// Runs the factored schedule for one layer while counting operations.
inline TracedOutput schedule_trace(const LayerCoeffs& lc, const Tensor& input,
                                   const CostParams& params = {}) {
  TracedOutput res;
  res.trace.layer = lc.conv ? "conv" : "dense";
  detail::TraceCounter cnt(res.trace, params);
  if (lc.conv) {
    res.output = detail::conv_engine(input, lc, ConvMode::plain, cnt);
    res.trace.passes = static_cast<OpCount>(res.trace.pass_add_mult.size());
  } else {
    res.output = detail::fc_engine(input, lc, cnt);
  }
  return res;
}

/// Trace on a zero input of the right geometry; conv ifmaps are H x W x C.
inline OpTrace schedule_trace(const LayerCoeffs& lc, std::size_t H, std::size_t W,
                              const CostParams& params = {}) {
  const Tensor input = lc.conv ? Tensor({H, W, lc.weight_shape[2]}) : Tensor({lc.weight_shape[1]});
  return schedule_trace(lc, input, params).trace;
}

/// Network inference with every conv and dense layer evaluated from the
/// coefficient store.
inline Tensor factored_predict(const NetworkSpec& net, const CoeffStore& store, const Tensor& x,
                               ConvMode mode = ConvMode::plain) {
  check_store(net, store);
  if (x.shape() != net.input_shape()) {
    throw Error(errc::kShapeMismatch, "factored_predict: input " + shape_string(x.shape()) +
                                          " does not match network input " +
                                          shape_string(net.input_shape()));
  }
  Tensor cur = x;
  std::size_t p = 0;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Layer& layer = net.layers()[i];
    if (const auto* conv = std::get_if<Conv2D>(&layer)) {
      cur = conv_factored(pad2d(cur, conv->pad), store.layers[p++], mode);
    } else if (std::holds_alternative<Dense>(layer)) {
      cur = fc_factored(cur, store.layers[p++]);
    } else {
      cur = detail::layer_forward(layer, cur, nullptr, net.layer_output_shape(i));
    }
  }
  return cur;
}

inline std::vector<OpTrace> network_trace(const NetworkSpec& net, const CoeffStore& store,
                                          const CostParams& params = {}) {
  check_store(net, store);
  std::vector<OpTrace> out;
  for (std::size_t p = 0; p < store.layers.size(); ++p) {
    const std::size_t li = net.parametric_layers()[p];
    const Shape& in = net.layer_input_shape(li);
    OpTrace t;
    if (const auto* conv = std::get_if<Conv2D>(&net.layers()[li])) {
      t = schedule_trace(store.layers[p], in[0] + 2 * conv->pad, in[1] + 2 * conv->pad, params);
    } else {
      t = schedule_trace(store.layers[p], 0, 0, params);
    }
    t.layer = layer_name(net.layers()[li]);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace polyapprox
