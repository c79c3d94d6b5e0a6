// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "polyapprox/cost.hpp"
#include "polyapprox/factored.hpp"
#include "polyapprox/svg.hpp"

namespace polyapprox {

namespace detail {

inline std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

inline std::string opt_count(const std::optional<OpCount>& v) {
  return v ? std::to_string(*v) : std::string("-");
}

/// 52544 -> "52.5k", 294 -> "0.294k".
inline std::string kilo(std::size_t n) {
  const double k = static_cast<double>(n) / 1000.0;
  return fmt(k >= 100 ? "%.1fk" : (k >= 1 ? "%.2fk" : "%.3fk"), k);
}

}  // namespace detail

inline nlohmann::json to_json(const CostReport& r) {
  using nlohmann::json;
  auto opt = [](const std::optional<OpCount>& v) { return v ? json(*v) : json(nullptr); };
  json layers = json::array();
  for (const auto& l : r.layers) {
    layers.push_back({{"name", l.name},
                      {"ops_proposed", opt(l.ops_proposed)},
                      {"ops_baseline", opt(l.ops_baseline)},
                      {"params_baseline", l.params_baseline},
                      {"params", l.params},
                      {"memory_kb", l.memory_kb},
                      {"memory_kb_baseline", l.memory_kb_baseline}});
  }
  json j = {{"model", r.model},
            {"layers", layers},
            {"ops_proposed", opt(r.ops_proposed)},
            {"ops_baseline", opt(r.ops_baseline)},
            {"params_baseline", r.params_baseline},
            {"params", r.params},
            {"memory_kb", r.memory_kb},
            {"memory_kb_baseline", r.memory_kb_baseline},
            {"ops_reduction", r.ops_reduction()},
            {"param_reduction", r.param_reduction()},
            {"memory_reduction", r.memory_reduction()},
            {"memory_reduction_vs_reference", r.memory_reduction_vs_reference()},
            {"ops_reduction_vs_reference", r.ops_reduction_vs_reference()}};
  if (r.reference) {
    j["reference"] = {{"name", r.reference->name},
                      {"params", r.reference->params},
                      {"memory_kb", r.reference->memory_kb},
                      {"ops", opt(r.reference->ops)}};
  } else {
    j["reference"] = nullptr;
  }
  return j;
}

inline std::string cost_csv(const CostReport& r) {
  std::string o = "layer,ops_proposed,ops_baseline,params_baseline,params,memory_kb,memory_kb_baseline\n";
  auto row = [&](const std::string& name, const std::optional<OpCount>& p,
                 const std::optional<OpCount>& b, std::size_t pb, std::size_t pa, double kb,
                 double kbb) {
    o += name + "," + detail::opt_count(p) + "," + detail::opt_count(b) + "," + std::to_string(pb) +
         "," + std::to_string(pa) + "," + detail::fmt("%.17g", kb) + "," +
         detail::fmt("%.17g", kbb) + "\n";
  };
  for (const auto& l : r.layers) {
    row(l.name, l.ops_proposed, l.ops_baseline, l.params_baseline, l.params, l.memory_kb,
        l.memory_kb_baseline);
  }
  row("total", r.ops_proposed, r.ops_baseline, r.params_baseline, r.params, r.memory_kb,
      r.memory_kb_baseline);
  return o;
}

inline std::string cost_text(const CostReport& r, const CostParams& p) {
  std::string o;
  char b[256];
  std::snprintf(b, sizeof b, "model %s (proposed weights %d-bit, baseline %d-bit)\n",
                r.model.c_str(), p.bits_proposed, p.bits_baseline);
  o += b;
  std::snprintf(b, sizeof b, "%-16s %12s %12s %10s %10s %10s\n", "layer", "ops", "ops_base",
                "Np_base", "Np", "KB");
  o += b;
  for (const auto& l : r.layers) {
    std::snprintf(b, sizeof b, "%-16s %12s %12s %10zu %10zu %10.3f\n", l.name.c_str(),
                  detail::opt_count(l.ops_proposed).c_str(), detail::opt_count(l.ops_baseline).c_str(),
                  l.params_baseline, l.params, l.memory_kb);
    o += b;
  }
  std::snprintf(b, sizeof b, "%-16s %12s %12s %10zu %10zu %10.3f\n", "total",
                detail::opt_count(r.ops_proposed).c_str(), detail::opt_count(r.ops_baseline).c_str(),
                r.params_baseline, r.params, r.memory_kb);
  o += b;
  o += "Np " + detail::kilo(r.params) + ", memory " + detail::fmt("%.3g KB", r.memory_kb) + "\n";
  if (r.ops_proposed && r.ops_baseline) {
    o += "ops reduction vs unconstrained: " + detail::fmt("%.2fx", r.ops_reduction()) + "\n";
  }
  if (r.reference) {
    o += "reference " + r.reference->name + ": Np " + detail::kilo(r.reference->params) +
         ", memory " + detail::fmt("%.1f KB", r.reference->memory_kb);
    if (r.reference->ops) o += ", ops " + std::to_string(*r.reference->ops);
    o += "\n";
    o += "memory reduction vs reference: " +
         detail::fmt("%.1fx", r.memory_reduction_vs_reference()) + "\n";
    if (r.reference->ops && r.ops_proposed) {
      o += "ops reduction vs reference: " + detail::fmt("%.1fx", r.ops_reduction_vs_reference()) +
           "\n";
    }
  }
  return o;
}

inline std::string sweep_csv(const std::vector<SweepPoint>& pts) {
  std::string o = "ifmap,filter,proposed,rs,proposed_over_rs\n";
  for (const auto& s : pts) {
    o += std::to_string(s.ifmap) + "," + std::to_string(s.filter) + "," +
         std::to_string(s.proposed) + "," + std::to_string(s.rs) + "," +
         detail::fmt("%.6f", static_cast<double>(s.proposed) / static_cast<double>(s.rs)) + "\n";
  }
  return o;
}

inline std::string sweep_svg(const std::vector<SweepPoint>& pts, std::size_t filter) {
  svg::Series prop{"proposed", {}}, rs{"row-stationary", {}};
  for (const auto& s : pts) {
    if (s.filter != filter) continue;
    prop.points.emplace_back(static_cast<double>(s.ifmap), static_cast<double>(s.proposed));
    rs.points.emplace_back(static_cast<double>(s.ifmap), static_cast<double>(s.rs));
  }
  const std::string f = std::to_string(filter);
  return svg::line_chart("adders + multipliers, one " + f + "x" + f + " filter", "ifmap size",
                         "operations", {prop, rs});
}

/// Two readings of a proposed/RS pair: the fraction of RS operations still
/// needed and the fraction saved. They are easy to confuse (584 vs 1080
/// needs 54.1% of the operations and saves 45.9%), so both are printed.
struct Savings {
  double ratio = 0.0;
  double saved = 0.0;
};

inline Savings savings(OpCount proposed, OpCount rs) {
  const double r = static_cast<double>(proposed) / static_cast<double>(rs);
  return {r, 1.0 - r};
}

inline std::string savings_text(const SweepPoint& s) {
  const Savings v = savings(s.proposed, s.rs);
  std::string o = "ifmap " + std::to_string(s.ifmap) + "x" + std::to_string(s.ifmap) + ", filter " +
                  std::to_string(s.filter) + "x" + std::to_string(s.filter) + ": proposed " +
                  std::to_string(s.proposed) + ", RS " + std::to_string(s.rs) +
                  detail::fmt("; proposed/RS = %.1f%%", 100 * v.ratio) +
                  detail::fmt(", saved = %.1f%%", 100 * v.saved);
  return o + "\n";
}

inline nlohmann::json to_json(const std::vector<OpTrace>& traces) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& t : traces) a.push_back(to_json(t));
  return a;
}

}  // namespace polyapprox
