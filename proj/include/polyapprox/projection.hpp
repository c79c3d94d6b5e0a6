// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "polyapprox/error.hpp"
#include "polyapprox/network.hpp"
#include "polyapprox/polyfit.hpp"
#include "polyapprox/tensor.hpp"

namespace polyapprox {

enum class GroupAxis {
  filter_row,       // one group per conv kernel row (group size == kernel width)
  contiguous_flat,  // consecutive runs along a neuron's input vector / a flattened kernel
};

inline const char* axis_name(GroupAxis a) {
  return a == GroupAxis::filter_row ? "filter-row" : "contiguous-flat";
}

/// Polynomial constraint for one parametric layer. degree 0 leaves the
/// layer unconstrained.
struct LayerScheme {
  int degree = 0;
  std::size_t group_size = 0;
  GroupAxis axis = GroupAxis::contiguous_flat;

  bool enabled() const noexcept { return degree > 0; }

  static LayerScheme none() { return {}; }
  static LayerScheme flat(int degree, std::size_t nw) {
    return {degree, nw, GroupAxis::contiguous_flat};
  }
  static LayerScheme rows(int degree, std::size_t kernel_width) {
    return {degree, kernel_width, GroupAxis::filter_row};
  }

  friend bool operator==(const LayerScheme&, const LayerScheme&) = default;
};

/// One LayerScheme per parametric layer of a network.
struct GroupScheme {
  std::vector<LayerScheme> layers;

  static GroupScheme none(const NetworkSpec& net) {
    return {std::vector<LayerScheme>(net.parametric_layers().size())};
  }

  bool any_enabled() const {
    for (const auto& l : layers) {
      if (l.enabled()) return true;
    }
    return false;
  }

  friend bool operator==(const GroupScheme&, const GroupScheme&) = default;
};

/// One weight group: `length` elements at flat offsets
/// base + (start + e) * stride, e = 0..length-1, evaluated at abscissa e.
struct WeightGroup {
  std::size_t line = 0;
  std::size_t base = 0;
  std::size_t stride = 1;
  std::size_t start = 0;
  std::size_t length = 0;
  bool fitted = false;
  std::size_t slot = 0;  // coefficient block index if fitted, else offset into exact values

  std::size_t offset(std::size_t e) const { return base + (start + e) * stride; }
};

inline void validate_layer_scheme(const Shape& weight_shape, bool conv,
                                  const LayerScheme& s) {
  if (!s.enabled()) {
    if (s.degree != 0) {
      throw Error(errc::kInvalidScheme, "negative polynomial degree");
    }
    return;
  }
  if (s.degree > kMaxDegree) {
    throw Error(errc::kInvalidScheme, "polynomial degree " + std::to_string(s.degree) +
                                          " not supported (1 or 2 only)");
  }
  if (s.group_size < static_cast<std::size_t>(s.degree) + 1) {
    throw Error(errc::kInvalidScheme,
                "group size " + std::to_string(s.group_size) + " too small for degree " +
                    std::to_string(s.degree) + " (needs at least degree+1)");
  }
  if (s.axis == GroupAxis::filter_row) {
    if (!conv) {
      throw Error(errc::kInvalidScheme, "filter-row grouping requires a conv layer");
    }
    if (s.group_size != weight_shape[1]) {
      throw Error(errc::kInvalidScheme,
                  "filter-row grouping needs group size == kernel width (" +
                      std::to_string(weight_shape[1]) + "), got " +
                      std::to_string(s.group_size));
    }
  }
}

/// Enumerates the groups of one layer. Dense weights (n_out x n_in) are
/// grouped along each neuron's input vector; conv kernels (kh x kw x C x K)
/// per kernel row (filter-row) or per flattened kh*kw slice (contiguous-flat).
/// Lines are split into runs of group_size; a trailing run longer than
/// degree+1 is fitted as its own shorter group, anything of at most
/// degree+1 values is stored verbatim (interpolation would not save storage).
class GroupLayout {
 public:
  GroupLayout() = default;

  GroupLayout(const Shape& weight_shape, bool conv, const LayerScheme& scheme)
      : shape_(weight_shape), conv_(conv), scheme_(scheme) {
    if (conv && weight_shape.size() != 4) {
      throw Error(errc::kGeometryMismatch, "conv weights must be kh x kw x C x K");
    }
    if (!conv && weight_shape.size() != 2) {
      throw Error(errc::kGeometryMismatch, "dense weights must be n_out x n_in");
    }
    validate_layer_scheme(weight_shape, conv, scheme);
    total_ = shape_size(weight_shape);
    if (!scheme.enabled()) {
      exact_count_ = total_;
      return;
    }
    std::size_t line = 0;
    auto add_line = [&](std::size_t base, std::size_t stride, std::size_t len) {
      for (std::size_t start = 0; start < len; start += scheme.group_size) {
        WeightGroup g;
        g.line = line;
        g.base = base;
        g.stride = stride;
        g.start = start;
        g.length = std::min(scheme.group_size, len - start);
        g.fitted = g.length > static_cast<std::size_t>(scheme.degree) + 1;
        if (g.fitted) {
          g.slot = fitted_count_++;
        } else {
          g.slot = exact_count_;
          exact_count_ += g.length;
        }
        groups_.push_back(g);
      }
      ++line;
    };
    if (!conv) {
      const std::size_t m = weight_shape[0], n = weight_shape[1];
      for (std::size_t o = 0; o < m; ++o) add_line(o * n, 1, n);
    } else {
      const std::size_t kh = weight_shape[0], kw = weight_shape[1];
      const std::size_t C = weight_shape[2], K = weight_shape[3];
      if (scheme.axis == GroupAxis::filter_row) {
        for (std::size_t i = 0; i < kh; ++i)
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t k = 0; k < K; ++k) add_line((i * kw * C + c) * K + k, C * K, kw);
      } else {
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t k = 0; k < K; ++k) add_line(c * K + k, C * K, kh * kw);
      }
    }
  }

  const Shape& weight_shape() const noexcept { return shape_; }
  bool conv() const noexcept { return conv_; }
  const LayerScheme& scheme() const noexcept { return scheme_; }
  const std::vector<WeightGroup>& groups() const noexcept { return groups_; }
  std::size_t fitted_groups() const noexcept { return fitted_count_; }
  std::size_t exact_count() const noexcept { return exact_count_; }
  std::size_t coeffs_per_group() const noexcept {
    return static_cast<std::size_t>(scheme_.degree) + 1;
  }
  std::size_t coefficient_count() const noexcept { return fitted_count_ * coeffs_per_group(); }
  std::size_t weight_count() const noexcept { return total_; }

  /// Stored numbers needed to rebuild the layer's weights (biases excluded).
  std::size_t parameter_count() const noexcept { return coefficient_count() + exact_count_; }

 private:
  Shape shape_;
  bool conv_ = false;
  LayerScheme scheme_;
  std::vector<WeightGroup> groups_;
  std::size_t fitted_count_ = 0;
  std::size_t exact_count_ = 0;
  std::size_t total_ = 0;
};

/// Compressed form of one parametric layer.
struct LayerCoeffs {
  Shape weight_shape;
  bool conv = false;
  LayerScheme scheme;
  std::vector<double> coefficients;  // fitted groups x (degree+1), group order
  std::vector<double> exact;         // verbatim weights of unfitted groups (all weights if degree 0)
  std::vector<double> bias;

  GroupLayout layout() const { return GroupLayout(weight_shape, conv, scheme); }
  std::size_t parameter_count() const { return coefficients.size() + exact.size(); }

  friend bool operator==(const LayerCoeffs&, const LayerCoeffs&) = default;
};

/// Per-parametric-layer coefficients: the compressed model.
struct CoeffStore {
  std::vector<LayerCoeffs> layers;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  friend bool operator==(const CoeffStore&, const CoeffStore&) = default;
};

inline void check_layer_coeffs(const LayerCoeffs& lc, const GroupLayout& layout) {
  if (lc.coefficients.size() != layout.coefficient_count() ||
      lc.exact.size() != layout.exact_count()) {
    throw Error(errc::kGeometryMismatch,
                "coefficient block holds " + std::to_string(lc.coefficients.size()) + "+" +
                    std::to_string(lc.exact.size()) + " values, geometry expects " +
                    std::to_string(layout.coefficient_count()) + "+" +
                    std::to_string(layout.exact_count()));
  }
}

inline Tensor reconstruct_layer(const LayerCoeffs& lc, const GroupLayout& layout) {
  check_layer_coeffs(lc, layout);
  if (!layout.scheme().enabled()) return Tensor(lc.weight_shape, lc.exact);
  Tensor w(lc.weight_shape);
  const std::size_t ncoef = layout.coeffs_per_group();
  for (const WeightGroup& g : layout.groups()) {
    if (g.fitted) {
      std::span<const double> c(lc.coefficients.data() + g.slot * ncoef, ncoef);
      for (std::size_t e = 0; e < g.length; ++e) w[g.offset(e)] = eval_poly(c, e);
    } else {
      for (std::size_t e = 0; e < g.length; ++e) w[g.offset(e)] = lc.exact[g.slot + e];
    }
  }
  return w;
}

/// Dense weight tensor described by a coefficient block.
inline Tensor reconstruct_layer(const LayerCoeffs& lc) {
  return reconstruct_layer(lc, lc.layout());
}

struct ProjectedLayer {
  LayerCoeffs coeffs;
  Tensor approx_weights;
};

/// Least-squares fit of every group; approx_weights is the reconstruction.
inline ProjectedLayer project_layer(const Tensor& weights, const GroupLayout& layout,
                                    const DesignCache& cache = DesignCache::shared()) {
  if (weights.shape() != layout.weight_shape()) {
    throw Error(errc::kGeometryMismatch, "project_layer: weights " +
                                             shape_string(weights.shape()) +
                                             " vs layout " +
                                             shape_string(layout.weight_shape()));
  }
  ProjectedLayer out;
  LayerCoeffs& lc = out.coeffs;
  lc.weight_shape = weights.shape();
  lc.conv = layout.conv();
  lc.scheme = layout.scheme();
  if (!layout.scheme().enabled()) {
    lc.exact = weights.values();
    out.approx_weights = weights;
    return out;
  }
  const std::size_t ncoef = layout.coeffs_per_group();
  lc.coefficients.assign(layout.coefficient_count(), 0.0);
  lc.exact.assign(layout.exact_count(), 0.0);
  std::vector<double> ys;
  for (const WeightGroup& g : layout.groups()) {
    if (g.fitted) {
      ys.resize(g.length);
      for (std::size_t e = 0; e < g.length; ++e) ys[e] = weights[g.offset(e)];
      const DesignOperator& op = cache.get(g.length, layout.scheme().degree);
      fit_poly_group(ys, op, std::span<double>(lc.coefficients.data() + g.slot * ncoef, ncoef));
    } else {
      for (std::size_t e = 0; e < g.length; ++e) lc.exact[g.slot + e] = weights[g.offset(e)];
    }
  }
  out.approx_weights = reconstruct_layer(lc, layout);
  return out;
}

inline ProjectedLayer project_layer(const Tensor& weights, bool conv, const LayerScheme& scheme,
                                    const DesignCache& cache = DesignCache::shared()) {
  return project_layer(weights, GroupLayout(weights.shape(), conv, scheme), cache);
}

inline void check_scheme(const NetworkSpec& net, const GroupScheme& scheme) {
  if (scheme.layers.size() != net.parametric_layers().size()) {
    throw Error(errc::kInvalidScheme,
                "scheme has " + std::to_string(scheme.layers.size()) +
                    " entries, network has " +
                    std::to_string(net.parametric_layers().size()) + " weight layers");
  }
  for (std::size_t p = 0; p < scheme.layers.size(); ++p) {
    try {
      validate_layer_scheme(net.weight_shape(p), net.is_conv(p), scheme.layers[p]);
    } catch (const Error& e) {
      throw Error(e.code(), "layer " + std::to_string(p) + ": " + e.what());
    }
  }
}

inline std::vector<GroupLayout> make_layouts(const NetworkSpec& net, const GroupScheme& scheme) {
  check_scheme(net, scheme);
  std::vector<GroupLayout> out;
  for (std::size_t p = 0; p < scheme.layers.size(); ++p) {
    out.emplace_back(net.weight_shape(p), net.is_conv(p), scheme.layers[p]);
  }
  return out;
}

/// Projects every layer of a parameter set; biases are carried over as-is.
inline CoeffStore project_parameters(const NetworkSpec& net, const Parameters& params,
                                     const GroupScheme& scheme,
                                     const DesignCache& cache = DesignCache::shared()) {
  check_parameters(net, params);
  const auto layouts = make_layouts(net, scheme);
  CoeffStore store;
  for (std::size_t p = 0; p < layouts.size(); ++p) {
    LayerCoeffs lc = project_layer(params.layers[p].weights, layouts[p], cache).coeffs;
    lc.bias = params.layers[p].bias;
    store.layers.push_back(std::move(lc));
  }
  return store;
}

inline void check_store(const NetworkSpec& net, const CoeffStore& store) {
  if (store.layers.size() != net.parametric_layers().size()) {
    throw Error(errc::kGeometryMismatch,
                "coefficient store has " + std::to_string(store.layers.size()) +
                    " layers, network has " +
                    std::to_string(net.parametric_layers().size()));
  }
  for (std::size_t p = 0; p < store.layers.size(); ++p) {
    const LayerCoeffs& lc = store.layers[p];
    if (lc.weight_shape != net.weight_shape(p) || lc.conv != net.is_conv(p) ||
        lc.bias.size() != net.bias_size(p)) {
      throw Error(errc::kGeometryMismatch,
                  "coefficient layer " + std::to_string(p) + " geometry " +
                      shape_string(lc.weight_shape) + " does not match network layer " +
                      shape_string(net.weight_shape(p)));
    }
  }
}

inline Parameters reconstruct_parameters(const NetworkSpec& net, const CoeffStore& store) {
  check_store(net, store);
  Parameters params;
  for (const LayerCoeffs& lc : store.layers) {
    params.layers.push_back({reconstruct_layer(lc), lc.bias});
  }
  return params;
}

/// Replaces each configured layer's weights by their polynomial projection.
inline void apply_projection(Parameters& params, const std::vector<GroupLayout>& layouts,
                             const DesignCache& cache = DesignCache::shared()) {
  for (std::size_t p = 0; p < layouts.size(); ++p) {
    if (!layouts[p].scheme().enabled()) continue;
    params.layers[p].weights = project_layer(params.layers[p].weights, layouts[p], cache).approx_weights;
  }
  params.touch();
}

struct LayerParamCount {
  std::string name;
  std::size_t baseline = 0;  // raw weights
  std::size_t approx = 0;    // stored numbers under the scheme
  double reduction() const {
    return approx ? static_cast<double>(baseline) / static_cast<double>(approx) : 0.0;
  }
};

struct ParamCount {
  std::vector<LayerParamCount> layers;
  std::size_t baseline_total = 0;
  std::size_t total = 0;
  double reduction() const {
    return total ? static_cast<double>(baseline_total) / static_cast<double>(total) : 0.0;
  }
};

/// Stored parameters per layer under a scheme; biases are not counted.
inline ParamCount count_params(const GroupScheme& scheme, const NetworkSpec& net) {
  const auto layouts = make_layouts(net, scheme);
  ParamCount pc;
  for (std::size_t p = 0; p < layouts.size(); ++p) {
    LayerParamCount lp;
    lp.name = layer_name(net.parametric_layer(p));
    lp.baseline = layouts[p].weight_count();
    lp.approx = layouts[p].parameter_count();
    pc.baseline_total += lp.baseline;
    pc.total += lp.approx;
    pc.layers.push_back(std::move(lp));
  }
  return pc;
}

inline ParamCount count_params(const CoeffStore& store) {
  ParamCount pc;
  for (const LayerCoeffs& lc : store.layers) {
    LayerParamCount lp;
    lp.name = lc.conv ? "conv" : "dense";
    lp.baseline = shape_size(lc.weight_shape);
    lp.approx = lc.parameter_count();
    pc.baseline_total += lp.baseline;
    pc.total += lp.approx;
    pc.layers.push_back(std::move(lp));
  }
  return pc;
}

}  // namespace polyapprox
