// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyapprox/error.hpp"
#include "polyapprox/network.hpp"
#include "polyapprox/projection.hpp"

namespace polyapprox {

using OpCount = std::int64_t;

/// Shift-add estimate of the adders needed to form the moments
/// d_k = sum_x x^k y_x (k = 0..degree) over `width` inputs. Constant
/// multiplies cost popcount(x^k) - 1 adders. Matches the calibrated values
/// for widths 3 and 5 (linear); everything else is an extrapolation.
inline OpCount shift_add_moment_adders(std::size_t width, int degree) {
  if (width == 0) return 0;
  OpCount adders = static_cast<OpCount>(width) - 1;  // d0
  for (int k = 1; k <= degree; ++k) {
    if (width < 2) break;
    adders += static_cast<OpCount>(width) - 2;  // summing the x >= 1 terms
    for (std::size_t x = 2; x < width; ++x) {
      std::uint64_t c = 1;
      for (int e = 0; e < k; ++e) c *= x;
      adders += std::popcount(c) - 1;
    }
  }
  return adders;
}

/// Calibration constants of the adder/multiplier model.
struct CostParams {
  // Adders per moment vector (one ifmap row or input group), linear case.
  std::map<std::size_t, OpCount> moment_adders{{3, 3}, {4, 5}, {5, 8}, {24, 62}, {28, 74}};
  // Same for quadratic moments; nothing is calibrated by default.
  std::map<std::size_t, OpCount> quadratic_moment_adders;
  // Fall back to shift_add_moment_adders() for uncalibrated widths.
  bool allow_estimate = false;
  int bits_baseline = 32;
  int bits_proposed = 8;

  /// Multipliers + adders in one coefficient-combine PE: d+1 and d.
  static OpCount pe_ops(int degree) { return 2 * degree + 1; }
  /// Row-stationary PE: one filter row against one ifmap row.
  static OpCount rs_pe_ops(std::size_t width) { return 2 * static_cast<OpCount>(width) - 1; }

  bool calibrated(std::size_t width, int degree) const {
    const auto& table = degree == 1 ? moment_adders : quadratic_moment_adders;
    return table.count(width) != 0;
  }

  OpCount moment_cost(std::size_t width, int degree) const {
    const auto& table = degree == 1 ? moment_adders : quadratic_moment_adders;
    if (auto it = table.find(width); it != table.end()) return it->second;
    if (allow_estimate) return shift_add_moment_adders(width, degree);
    throw Error(errc::kUncalibratedWidth,
                "no moment-adder calibration for width " + std::to_string(width) +
                    " (degree " + std::to_string(degree) +
                    "); add a moment_adders entry or enable the shift-add estimator");
  }
};

/// Proposed PE array, one filter on one ifmap, per output column:
/// N1*N2 + pe_ops*N3 with N1 = H, N2 = moment adders for the kernel width,
/// N3 = kh * (H - kh + 1).
inline OpCount conv_cost_proposed(std::size_t H, std::size_t W, std::size_t kh,
                                  std::size_t kw, int degree, const CostParams& params) {
  if (kh > H || kw > W || kh == 0 || kw == 0) {
    throw Error(errc::kInvalidArgument, "conv_cost_proposed: filter larger than ifmap");
  }
  const OpCount n1 = static_cast<OpCount>(H);
  const OpCount n2 = params.moment_cost(kw, degree);
  const OpCount n3 = static_cast<OpCount>(kh * (H - kh + 1));
  return n1 * n2 + CostParams::pe_ops(degree) * n3;
}

/// Row-stationary baseline for the same array: N3 * (2 kw - 1).
inline OpCount conv_cost_rs(std::size_t H, std::size_t W, std::size_t kh, std::size_t kw) {
  if (kh > H || kw > W || kh == 0 || kw == 0) {
    throw Error(errc::kInvalidArgument, "conv_cost_rs: filter larger than ifmap");
  }
  return static_cast<OpCount>(kh * (H - kh + 1)) * CostParams::rs_pe_ops(kw);
}

/// Unconstrained n -> m layer: n*m multiplies and (n-1)*m adds.
inline OpCount fc_cost_naive(std::size_t n, std::size_t m) {
  if (n == 0 || m == 0) throw Error(errc::kInvalidArgument, "fc_cost_naive: empty layer");
  return 2 * static_cast<OpCount>(n) * static_cast<OpCount>(m) - static_cast<OpCount>(m);
}

namespace detail {

struct Run {
  std::size_t length;
  bool fitted;
};

// Same split rule as GroupLayout.
inline std::vector<Run> line_runs(std::size_t len, const LayerScheme& s) {
  if (!s.enabled()) return {{len, false}};
  std::vector<Run> runs;
  for (std::size_t start = 0; start < len; start += s.group_size) {
    const std::size_t l = std::min(s.group_size, len - start);
    runs.push_back({l, l > static_cast<std::size_t>(s.degree) + 1});
  }
  return runs;
}

}  // namespace detail

/// Grouped n -> m layer: every fitted group costs one moment vector
/// (charged at the nominal group width, shorter tails are zero-padded) and
/// one PE per output; per output the group partials are summed. Verbatim
/// runs of length L cost L multiplies + L-1 adds per output.
/// With G = ceil(n/Nw) fitted groups this is G*N2 + pe_ops*G*m + (G-1)*m.
inline OpCount fc_cost_proposed(std::size_t n, std::size_t m, const LayerScheme& scheme,
                                const CostParams& params) {
  if (n == 0 || m == 0) throw Error(errc::kInvalidArgument, "fc_cost_proposed: empty layer");
  const auto runs = detail::line_runs(n, scheme);
  OpCount moments = 0, per_output = 0;
  for (const auto& r : runs) {
    if (r.fitted) {
      moments += params.moment_cost(scheme.group_size, scheme.degree);
      per_output += CostParams::pe_ops(scheme.degree);
    } else {
      per_output += 2 * static_cast<OpCount>(r.length) - 1;
    }
  }
  per_output += static_cast<OpCount>(runs.size()) - 1;
  return moments + per_output * static_cast<OpCount>(m);
}

inline OpCount fc_cost_proposed(std::size_t n, std::size_t m, std::size_t nw, int degree,
                                const CostParams& params) {
  return fc_cost_proposed(n, m, LayerScheme::flat(degree, nw), params);
}

/// Whole conv layer (ifmap H x W x C, already padded; K kernels),
/// summed over all W - kw + 1 column passes. Per pass: filter-row groups
/// need C*H moment vectors shared by every kernel and output row; flattened
/// groups need one vector per (channel, output row, run). Every
/// (kernel, channel, group, output row) costs a PE. Degree 0 reduces to the
/// row-stationary count.
inline OpCount conv_layer_cost_proposed(std::size_t H, std::size_t W, std::size_t C,
                                        std::size_t kh, std::size_t kw, std::size_t K,
                                        const LayerScheme& scheme, const CostParams& params) {
  if (kh > H || kw > W) throw Error(errc::kInvalidArgument, "conv layer: filter larger than ifmap");
  const OpCount passes = static_cast<OpCount>(W - kw + 1);
  const OpCount oh = static_cast<OpCount>(H - kh + 1);
  const OpCount c = static_cast<OpCount>(C), k = static_cast<OpCount>(K);
  OpCount per_pass = 0;
  if (!scheme.enabled()) {
    per_pass = k * c * static_cast<OpCount>(kh) * oh * CostParams::rs_pe_ops(kw);
  } else if (scheme.axis == GroupAxis::filter_row) {
    const auto runs = detail::line_runs(kw, scheme);
    const bool fitted = runs.size() == 1 && runs[0].fitted;
    if (fitted) {
      per_pass = c * static_cast<OpCount>(H) * params.moment_cost(kw, scheme.degree) +
                 k * c * static_cast<OpCount>(kh) * oh * CostParams::pe_ops(scheme.degree);
    } else {
      per_pass = k * c * static_cast<OpCount>(kh) * oh * CostParams::rs_pe_ops(kw);
    }
  } else {
    for (const auto& r : detail::line_runs(kh * kw, scheme)) {
      if (r.fitted) {
        per_pass += c * oh * params.moment_cost(scheme.group_size, scheme.degree) +
                    k * c * oh * CostParams::pe_ops(scheme.degree);
      } else {
        per_pass += k * c * oh * (2 * static_cast<OpCount>(r.length) - 1);
      }
    }
  }
  return passes * per_pass;
}

inline OpCount conv_layer_cost_rs(std::size_t H, std::size_t W, std::size_t C, std::size_t kh,
                                  std::size_t kw, std::size_t K) {
  return static_cast<OpCount>(W - kw + 1) * static_cast<OpCount>(K * C) *
         conv_cost_rs(H, W, kh, kw);
}

/// Storage in decimal kilobytes.
inline double memory_kb(std::size_t params, int bits) {
  return static_cast<double>(params) * bits / 8.0 / 1000.0;
}

struct LayerCost {
  std::string name;
  std::optional<OpCount> ops_proposed;
  std::optional<OpCount> ops_baseline;  // naive FC / row-stationary conv
  std::size_t params_baseline = 0;
  std::size_t params = 0;
  double memory_kb = 0.0;           // params at bits_proposed
  double memory_kb_baseline = 0.0;  // raw weights at bits_baseline
};

/// A comparison model evaluated unconstrained at bits_baseline.
struct ReferenceCost {
  std::string name;
  std::size_t params = 0;
  double memory_kb = 0.0;
  std::optional<OpCount> ops;
};

struct CostReport {
  std::string model;
  std::vector<LayerCost> layers;
  std::optional<OpCount> ops_proposed;
  std::optional<OpCount> ops_baseline;
  std::size_t params_baseline = 0;
  std::size_t params = 0;
  double memory_kb = 0.0;
  double memory_kb_baseline = 0.0;
  std::optional<ReferenceCost> reference;

  double ops_reduction() const {
    return ops_proposed && ops_baseline ? static_cast<double>(*ops_baseline) / *ops_proposed : 0.0;
  }
  double memory_reduction() const { return memory_kb > 0 ? memory_kb_baseline / memory_kb : 0.0; }
  double param_reduction() const {
    return params ? static_cast<double>(params_baseline) / static_cast<double>(params) : 0.0;
  }
  /// Reference memory at bits_baseline over this model at bits_proposed.
  double memory_reduction_vs_reference() const {
    return reference && memory_kb > 0 ? reference->memory_kb / memory_kb : memory_reduction();
  }
  double ops_reduction_vs_reference() const {
    if (reference && reference->ops && ops_proposed) {
      return static_cast<double>(*reference->ops) / static_cast<double>(*ops_proposed);
    }
    return ops_reduction();
  }
};

/// Memory-only report from parameter counts.
inline CostReport memory_report(const ParamCount& counts, const CostParams& params,
                                std::optional<ReferenceCost> reference = std::nullopt,
                                std::string model = {}) {
  CostReport rep;
  rep.model = std::move(model);
  for (const auto& l : counts.layers) {
    LayerCost lc;
    lc.name = l.name;
    lc.params_baseline = l.baseline;
    lc.params = l.approx;
    lc.memory_kb = memory_kb(l.approx, params.bits_proposed);
    lc.memory_kb_baseline = memory_kb(l.baseline, params.bits_baseline);
    rep.params_baseline += lc.params_baseline;
    rep.params += lc.params;
    rep.memory_kb += lc.memory_kb;
    rep.memory_kb_baseline += lc.memory_kb_baseline;
    rep.layers.push_back(std::move(lc));
  }
  rep.reference = std::move(reference);
  return rep;
}

inline LayerCost layer_cost(const NetworkSpec& net, std::size_t p, const LayerScheme& scheme,
                            const CostParams& params) {
  LayerCost lc;
  const Layer& layer = net.parametric_layer(p);
  lc.name = layer_name(layer);
  const GroupLayout layout(net.weight_shape(p), net.is_conv(p), scheme);
  lc.params_baseline = layout.weight_count();
  lc.params = layout.parameter_count();
  lc.memory_kb = memory_kb(lc.params, params.bits_proposed);
  lc.memory_kb_baseline = memory_kb(lc.params_baseline, params.bits_baseline);
  if (const auto* conv = std::get_if<Conv2D>(&layer)) {
    const Shape& in = net.layer_input_shape(net.parametric_layers()[p]);
    const std::size_t H = in[0] + 2 * conv->pad, W = in[1] + 2 * conv->pad;
    lc.ops_baseline = conv_layer_cost_rs(H, W, in[2], conv->kh, conv->kw, conv->kernels);
    lc.ops_proposed =
        conv_layer_cost_proposed(H, W, in[2], conv->kh, conv->kw, conv->kernels, scheme, params);
  } else {
    const auto& d = std::get<Dense>(layer);
    lc.ops_baseline = fc_cost_naive(d.n_in, d.n_out);
    lc.ops_proposed = fc_cost_proposed(d.n_in, d.n_out, scheme, params);
  }
  return lc;
}

inline ReferenceCost reference_cost(const NetworkSpec& ref, const CostParams& params) {
  ReferenceCost rc;
  rc.name = ref.name();
  rc.params = ref.weight_count();
  rc.memory_kb = memory_kb(rc.params, params.bits_baseline);
  OpCount ops = 0;
  for (std::size_t p = 0; p < ref.parametric_layers().size(); ++p) {
    ops += *layer_cost(ref, p, LayerScheme::none(), params).ops_baseline;
  }
  rc.ops = ops;
  return rc;
}

/// Per-layer operations, parameters and memory of a network under a scheme.
inline CostReport cost_report(const NetworkSpec& net, const GroupScheme& scheme,
                              const CostParams& params,
                              std::optional<ReferenceCost> reference = std::nullopt) {
  check_scheme(net, scheme);
  CostReport rep;
  rep.model = net.name();
  OpCount prop = 0, base = 0;
  for (std::size_t p = 0; p < scheme.layers.size(); ++p) {
    LayerCost lc = layer_cost(net, p, scheme.layers[p], params);
    prop += *lc.ops_proposed;
    base += *lc.ops_baseline;
    rep.params_baseline += lc.params_baseline;
    rep.params += lc.params;
    rep.memory_kb += lc.memory_kb;
    rep.memory_kb_baseline += lc.memory_kb_baseline;
    rep.layers.push_back(std::move(lc));
  }
  rep.ops_proposed = prop;
  rep.ops_baseline = base;
  rep.reference = std::move(reference);
  return rep;
}

struct SweepPoint {
  std::size_t ifmap = 0;
  std::size_t filter = 0;
  OpCount proposed = 0;
  OpCount rs = 0;
};

/// Square ifmaps of side lo..hi against a square filter, linear degree.
inline std::vector<SweepPoint> conv_sweep(std::size_t filter, std::size_t lo, std::size_t hi,
                                          const CostParams& params) {
  std::vector<SweepPoint> out;
  for (std::size_t h = std::max(lo, filter); h <= hi; ++h) {
    out.push_back({h, filter, conv_cost_proposed(h, h, filter, filter, 1, params),
                   conv_cost_rs(h, h, filter, filter)});
  }
  return out;
}

}  // namespace polyapprox
