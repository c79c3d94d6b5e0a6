// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment configuration: named presets for every reproduced table row and
// a strict JSON schema layered on top of them.

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "polyapprox/architectures.hpp"
#include "polyapprox/cost.hpp"
#include "polyapprox/error.hpp"
#include "polyapprox/projection.hpp"
#include "polyapprox/training.hpp"

namespace polyapprox {

using nlohmann::json;

struct ExperimentConfig {
  std::string preset;
  std::string architecture = "mnist_fc_64_32";
  GroupScheme scheme;               // empty: unconstrained
  std::optional<GroupScheme> posthoc_scheme;
  std::string reference;            // 32-bit comparison model, empty for none
  std::string dataset = "mnist";    // mnist | cifar10
  std::string data_root;            // empty: POLYAPPROX_DATA or ./data
  std::size_t train_count = 50000;
  std::size_t test_count = 10000;
  TrainConfig train;
  CostParams cost;
  std::vector<std::size_t> sweep_filters{3, 5};
  std::size_t sweep_min = 5;
  std::size_t sweep_max = 32;

  NetworkSpec network() const { return arch::by_name(architecture); }
  GroupScheme resolved_scheme() const {
    return scheme.layers.empty() ? GroupScheme::none(network()) : scheme;
  }
};

namespace detail {

inline LayerScheme fc(int d, std::size_t nw) { return LayerScheme::flat(d, nw); }
inline LayerScheme rows(int d) { return LayerScheme::rows(d, 5); }

}  // namespace detail

inline std::vector<ExperimentConfig> presets() {
  using detail::fc;
  using detail::rows;
  std::vector<ExperimentConfig> out;
  const LayerScheme none = LayerScheme::none();

  auto mnist_fc = [&](std::string name, GroupScheme s) {
    ExperimentConfig c;
    c.preset = std::move(name);
    c.architecture = "mnist_fc_64_32";
    c.scheme = std::move(s);
    c.reference = "lenet_300_100";
    c.train.epochs = 20;
    out.push_back(std::move(c));
  };
  // One entry per layer (784->64, 64->32, 32->10); none keeps a layer exact.
  mnist_fc("fc-case0", {{none, none, none}});
  mnist_fc("fc-case1", {{fc(1, 8), fc(1, 8), fc(1, 8)}});
  mnist_fc("fc-case2", {{fc(1, 16), fc(1, 16), none}});
  mnist_fc("fc-case3", {{fc(1, 24), fc(1, 4), none}});
  mnist_fc("fc-case4", {{fc(1, 28), fc(1, 4), none}});
  mnist_fc("fc-case5", {{fc(2, 28), fc(2, 8), none}});
  mnist_fc("fc-case6", {{fc(2, 28), fc(2, 16), none}});
  mnist_fc("fc-case7", {{fc(2, 32), fc(2, 16), none}});
  mnist_fc("fc-nw3", {{fc(1, 3), fc(1, 3), fc(1, 3)}});
  {
    ExperimentConfig c = out.front();
    c.preset = "fc-posthoc";
    c.posthoc_scheme = GroupScheme{{fc(1, 3), fc(1, 3), fc(1, 3)}};
    out.push_back(std::move(c));
  }
  {
    ExperimentConfig c;
    c.preset = "lenet-300-100";
    c.architecture = "lenet_300_100";
    c.reference = "lenet_300_100";
    out.push_back(std::move(c));
  }

  auto mnist_cnn = [&](std::string name, GroupScheme s) {
    ExperimentConfig c;
    c.preset = std::move(name);
    c.architecture = "mnist_cnn";
    c.scheme = std::move(s);
    c.reference = "lenet5";
    c.train.epochs = 10;
    out.push_back(std::move(c));
  };
  mnist_cnn("cnn-case0", {{none, none, none}});
  out.back().posthoc_scheme = GroupScheme{{rows(1), rows(1), fc(1, 6)}};
  mnist_cnn("cnn-case1", {{rows(1), rows(1), fc(1, 6)}});
  mnist_cnn("cnn-case2", {{rows(1), rows(1), fc(1, 32)}});
  mnist_cnn("cnn-case3", {{rows(1), rows(1), fc(1, 64)}});
  mnist_cnn("cnn-case4", {{rows(1), rows(1), fc(1, 96)}});
  mnist_cnn("cnn-case5", {{rows(2), rows(2), fc(2, 192)}});
  mnist_cnn("cnn-case6", {{fc(2, 25), fc(2, 25), fc(2, 96)}});

  auto cifar = [&](std::string name, GroupScheme s) {
    ExperimentConfig c;
    c.preset = std::move(name);
    c.architecture = "cifar_cnn";
    c.scheme = std::move(s);
    c.reference = "cifar_cnn";
    c.dataset = "cifar10";
    c.train_count = 50000;
    c.train.epochs = 20;
    c.train.learning_rate = 0.001;
    out.push_back(std::move(c));
  };
  cifar("cifar-baseline", {{none, none, none, none, none}});
  out.back().posthoc_scheme = GroupScheme{{rows(1), rows(1), rows(1), fc(1, 8), fc(1, 8)}};
  cifar("cifar-5-8", {{rows(1), rows(1), rows(1), fc(1, 8), fc(1, 8)}});
  cifar("cifar-5-16", {{rows(1), rows(1), rows(1), fc(1, 16), fc(1, 16)}});
  cifar("cifar-5-32", {{rows(1), rows(1), rows(1), fc(1, 32), fc(1, 32)}});
  return out;
}

inline ExperimentConfig preset(const std::string& name) {
  for (auto& p : presets()) {
    if (p.preset == name) return p;
  }
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.preset;
  throw Error(errc::kInvalidConfig, "unknown preset '" + name + "' (known: " + known + ")");
}

// JSON schema ---------------------------------------------------------------

inline json to_json(const LayerScheme& s) {
  if (!s.enabled()) return json(nullptr);
  return {{"degree", s.degree}, {"group_size", s.group_size}, {"axis", axis_name(s.axis)}};
}

inline json to_json(const GroupScheme& s) {
  json a = json::array();
  for (const auto& l : s.layers) a.push_back(to_json(l));
  return a;
}

namespace detail {

[[noreturn]] inline void bad_field(const std::string& field, const std::string& why) {
  throw Error(errc::kInvalidConfig, "config field '" + field + "': " + why);
}

inline void only_keys(const json& j, const std::string& where, const std::set<std::string>& keys) {
  if (!j.is_object()) bad_field(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) bad_field(where.empty() ? k : where + "." + k, "unknown field");
  }
}

template <class T>
T get_as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    bad_field(field, "wrong type");
  }
}

inline std::size_t get_count(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 0) bad_field(field, "expected an integer >= 0");
  return j.get<std::size_t>();
}

}  // namespace detail

inline LayerScheme layer_scheme_from_json(const json& j, const std::string& field) {
  if (j.is_null()) return LayerScheme::none();
  detail::only_keys(j, field, {"degree", "group_size", "axis"});
  LayerScheme s;
  if (!j.contains("degree")) detail::bad_field(field + ".degree", "missing");
  s.degree = detail::get_as<int>(j["degree"], field + ".degree");
  if (s.degree < 0 || s.degree > kMaxDegree) detail::bad_field(field + ".degree", "must be 0, 1 or 2");
  if (s.degree == 0) return LayerScheme::none();
  if (!j.contains("group_size")) detail::bad_field(field + ".group_size", "missing");
  s.group_size = detail::get_count(j["group_size"], field + ".group_size");
  const std::string axis = j.contains("axis") ? detail::get_as<std::string>(j["axis"], field + ".axis")
                                              : std::string("contiguous-flat");
  if (axis == "filter-row") {
    s.axis = GroupAxis::filter_row;
  } else if (axis == "contiguous-flat") {
    s.axis = GroupAxis::contiguous_flat;
  } else {
    detail::bad_field(field + ".axis", "expected filter-row or contiguous-flat");
  }
  return s;
}

inline GroupScheme scheme_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) detail::bad_field(field, "expected an array with one entry per weighted layer");
  GroupScheme s;
  for (std::size_t i = 0; i < j.size(); ++i) {
    s.layers.push_back(layer_scheme_from_json(j[i], field + "[" + std::to_string(i) + "]"));
  }
  return s;
}

inline json to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"seed", t.seed},
          {"loss", t.loss == Loss::cross_entropy ? "cross_entropy" : "mean_squared_error"}};
}

inline json to_json(const ExperimentConfig& c) {
  json cost_adders = json::object();
  for (auto [w, n] : c.cost.moment_adders) cost_adders[std::to_string(w)] = n;
  json quad = json::object();
  for (auto [w, n] : c.cost.quadratic_moment_adders) quad[std::to_string(w)] = n;
  json j = {{"preset", c.preset},
            {"architecture", c.architecture},
            {"scheme", to_json(c.resolved_scheme())},
            {"reference", c.reference},
            {"dataset", c.dataset},
            {"data_root", c.data_root},
            {"train_count", c.train_count},
            {"test_count", c.test_count},
            {"train", to_json(c.train)},
            {"cost",
             {{"moment_adders", cost_adders},
              {"quadratic_moment_adders", quad},
              {"allow_estimate", c.cost.allow_estimate},
              {"bits_baseline", c.cost.bits_baseline},
              {"bits_proposed", c.cost.bits_proposed}}},
            {"sweep", {{"filters", c.sweep_filters}, {"min", c.sweep_min}, {"max", c.sweep_max}}}};
  j["posthoc_scheme"] = c.posthoc_scheme ? to_json(*c.posthoc_scheme) : json(nullptr);
  return j;
}

/// Parses a config object. A "preset" key supplies defaults that the other
/// keys override; unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& j) {
  using detail::bad_field;
  detail::only_keys(j, "", {"preset", "architecture", "scheme", "posthoc_scheme", "reference",
                            "dataset", "data_root", "train_count", "test_count", "train", "cost",
                            "sweep"});
  ExperimentConfig c;
  if (j.contains("preset") && !j["preset"].is_null()) {
    c = preset(detail::get_as<std::string>(j["preset"], "preset"));
  }
  if (j.contains("architecture")) {
    c.architecture = detail::get_as<std::string>(j["architecture"], "architecture");
    try {
      (void)arch::by_name(c.architecture);
    } catch (const Error& e) {
      bad_field("architecture", e.what());
    }
    if (!j.contains("scheme")) c.scheme = {};
  }
  if (j.contains("scheme")) {
    c.scheme = j["scheme"].is_null() ? GroupScheme{} : scheme_from_json(j["scheme"], "scheme");
  }
  if (j.contains("posthoc_scheme")) {
    if (j["posthoc_scheme"].is_null()) {
      c.posthoc_scheme.reset();
    } else {
      c.posthoc_scheme = scheme_from_json(j["posthoc_scheme"], "posthoc_scheme");
    }
  }
  if (j.contains("reference")) {
    c.reference = detail::get_as<std::string>(j["reference"], "reference");
    if (!c.reference.empty()) {
      try {
        (void)arch::by_name(c.reference);
      } catch (const Error& e) {
        bad_field("reference", e.what());
      }
    }
  }
  if (j.contains("dataset")) {
    c.dataset = detail::get_as<std::string>(j["dataset"], "dataset");
    if (c.dataset != "mnist" && c.dataset != "cifar10") bad_field("dataset", "expected mnist or cifar10");
  }
  if (j.contains("data_root")) c.data_root = detail::get_as<std::string>(j["data_root"], "data_root");
  if (j.contains("train_count")) c.train_count = detail::get_count(j["train_count"], "train_count");
  if (j.contains("test_count")) c.test_count = detail::get_count(j["test_count"], "test_count");
  if (j.contains("train")) {
    const json& t = j["train"];
    detail::only_keys(t, "train", {"epochs", "batch_size", "learning_rate", "seed", "loss"});
    if (t.contains("epochs")) c.train.epochs = detail::get_count(t["epochs"], "train.epochs");
    if (t.contains("batch_size")) {
      c.train.batch_size = detail::get_count(t["batch_size"], "train.batch_size");
      if (c.train.batch_size == 0) bad_field("train.batch_size", "must be positive");
    }
    if (t.contains("learning_rate")) {
      if (!t["learning_rate"].is_number()) bad_field("train.learning_rate", "expected a number");
      c.train.learning_rate = t["learning_rate"].get<double>();
      if (!(c.train.learning_rate > 0.0)) bad_field("train.learning_rate", "must be positive");
    }
    if (t.contains("seed")) {
      const json& sd = t["seed"];
      if (!sd.is_number_integer() || (!sd.is_number_unsigned() && sd.get<long long>() < 0)) bad_field("train.seed", "expected an unsigned integer");
      c.train.seed = t["seed"].get<std::uint64_t>();
    }
    if (t.contains("loss")) {
      const auto l = detail::get_as<std::string>(t["loss"], "train.loss");
      if (l == "cross_entropy") {
        c.train.loss = Loss::cross_entropy;
      } else if (l == "mean_squared_error") {
        c.train.loss = Loss::mean_squared_error;
      } else {
        bad_field("train.loss", "expected cross_entropy or mean_squared_error");
      }
    }
  }
  if (j.contains("cost")) {
    const json& k = j["cost"];
    detail::only_keys(k, "cost", {"moment_adders", "quadratic_moment_adders", "allow_estimate",
                                  "bits_baseline", "bits_proposed"});
    if (k.contains("moment_adders") && !k["moment_adders"].is_object()) {
      bad_field("cost.moment_adders", "expected an object");
    }
    if (k.contains("quadratic_moment_adders") && !k["quadratic_moment_adders"].is_object()) {
      bad_field("cost.quadratic_moment_adders", "expected an object");
    }
    auto fill = [&](const char* key, std::map<std::size_t, OpCount>& dst) {
      if (!k.contains(key)) return;
      const std::string f = std::string("cost.") + key;
      dst.clear();
      for (const auto& [w, n] : k[key].items()) {
        std::size_t width = 0;
        try {
          width = std::stoul(w);
        } catch (const std::exception&) {
          bad_field(f, "keys must be widths");
        }
        dst[width] = static_cast<OpCount>(detail::get_count(n, f + "." + w));
      }
    };
    fill("moment_adders", c.cost.moment_adders);
    fill("quadratic_moment_adders", c.cost.quadratic_moment_adders);
    if (k.contains("allow_estimate")) {
      c.cost.allow_estimate = detail::get_as<bool>(k["allow_estimate"], "cost.allow_estimate");
    }
    if (k.contains("bits_baseline")) {
      c.cost.bits_baseline = static_cast<int>(detail::get_count(k["bits_baseline"], "cost.bits_baseline"));
    }
    if (k.contains("bits_proposed")) {
      c.cost.bits_proposed = static_cast<int>(detail::get_count(k["bits_proposed"], "cost.bits_proposed"));
    }
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    detail::only_keys(s, "sweep", {"filters", "min", "max"});
    if (s.contains("filters")) {
      if (!s["filters"].is_array()) bad_field("sweep.filters", "expected an array");
      c.sweep_filters.clear();
      for (const auto& f : s["filters"]) c.sweep_filters.push_back(detail::get_count(f, "sweep.filters"));
    }
    if (s.contains("min")) c.sweep_min = detail::get_count(s["min"], "sweep.min");
    if (s.contains("max")) c.sweep_max = detail::get_count(s["max"], "sweep.max");
  }
  try {
    check_scheme(c.network(), c.resolved_scheme());
    if (c.posthoc_scheme) check_scheme(c.network(), *c.posthoc_scheme);
  } catch (const Error& e) {
    bad_field("scheme", e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kInvalidConfig, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(errc::kInvalidConfig, "config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

inline std::optional<ReferenceCost> reference_of(const ExperimentConfig& c) {
  if (c.reference.empty()) return std::nullopt;
  return reference_cost(arch::by_name(c.reference), c.cost);
}

}  // namespace polyapprox
