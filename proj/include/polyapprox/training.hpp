// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "polyapprox/datasets.hpp"
#include "polyapprox/error.hpp"
#include "polyapprox/network.hpp"
#include "polyapprox/projection.hpp"
#include "polyapprox/rng.hpp"

namespace polyapprox {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  std::uint64_t seed = 1;
  Loss loss = Loss::cross_entropy;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-example loss over the epoch, before each update
  double test_accuracy = 0.0;
};

struct MetricsLog {
  std::vector<EpochMetrics> epochs;

  std::string to_csv() const {
    std::string out = "epoch,train_loss,test_accuracy\n";
    char buf[96];
    for (const auto& e : epochs) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e.epoch, e.train_loss, e.test_accuracy);
      out += buf;
    }
    return out;
  }

  static MetricsLog from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "epoch,train_loss,test_accuracy") {
      throw Error(errc::kInvalidArgument, "metrics CSV: unexpected header");
    }
    MetricsLog log;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      EpochMetrics e;
      char extra = 0;
      if (std::sscanf(line.c_str(), "%zu,%lf,%lf%c", &e.epoch, &e.train_loss, &e.test_accuracy,
                      &extra) != 3) {
        throw Error(errc::kInvalidArgument, "metrics CSV: bad row '" + line + "'");
      }
      log.epochs.push_back(e);
    }
    return log;
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(errc::kIo, "cannot write " + path);
    out << to_csv();
  }
};

/// Fraction of test images whose argmax prediction matches the label.
inline double evaluate(const NetworkSpec& net, const Parameters& params, const Dataset& test) {
  check_parameters(net, params);
  if (test.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Tensor y = predict(net, params, test.image(i).reshaped(net.input_shape()));
    correct += argmax(y.data()) == test.labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

inline double evaluate(const NetworkSpec& net, const CoeffStore& store, const Dataset& test) {
  return evaluate(net, reconstruct_parameters(net, store), test);
}

struct TrainResult {
  Parameters params;
  CoeffStore store;
  MetricsLog log;
  double initial_accuracy = 0.0;
  double final_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

inline std::uint64_t shuffle_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ull; }

/// Mini-batch SGD. After every update the configured layers are replaced by
/// their polynomial reconstruction; with no layer configured the projection
/// step is skipped entirely.
inline TrainResult train(const NetworkSpec& net, const GroupScheme& scheme, const Dataset& train_set,
                         const Dataset& test_set, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  check_scheme(net, scheme);
  if (cfg.batch_size == 0) throw Error(errc::kInvalidConfig, "batch_size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw Error(errc::kInvalidConfig, "learning_rate must be positive");
  if (shape_size(net.input_shape()) != train_set.image_size() && train_set.size() != 0) {
    throw Error(errc::kShapeMismatch, "training images do not match the network input");
  }
  const auto layouts = make_layouts(net, scheme);
  const bool project = scheme.any_enabled();
  const std::size_t classes = shape_size(net.output_shape());

  TrainResult res;
  res.params = init_parameters(net, cfg.seed);
  res.initial_accuracy = evaluate(net, res.params, test_set);
  Rng rng(shuffle_seed(cfg.seed));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Gradients grads = zero_gradients(net);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(b1 - b0);
      for (auto& g : grads) {
        std::fill(g.weights.values().begin(), g.weights.values().end(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
      }
      double batch_loss = 0.0;
      for (std::size_t b = b0; b < b1; ++b) {
        const std::size_t idx = order[b];
        const ForwardResult fr =
            forward(net, res.params, train_set.image(idx).reshaped(net.input_shape()));
        const Tensor target = one_hot(train_set.labels[idx], classes);
        batch_loss += example_loss(net, fr.cache, target, cfg.loss);
        backward_accumulate(net, res.params, fr.cache, target, cfg.loss, grads, scale);
      }
      if (!std::isfinite(batch_loss)) {
        throw Error(errc::kDiverged, "training diverged: non-finite loss in epoch " +
                                         std::to_string(epoch) + " at example " +
                                         std::to_string(b0) + " (learning rate " +
                                         std::to_string(cfg.learning_rate) + ")");
      }
      loss_sum += batch_loss;
      sgd_step(res.params, grads, cfg.learning_rate);
      if (project) apply_projection(res.params, layouts);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
    m.test_accuracy = evaluate(net, res.params, test_set);
    res.log.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  res.store = project_parameters(net, res.params, scheme);
  res.final_accuracy =
      res.log.epochs.empty() ? res.initial_accuracy : res.log.epochs.back().test_accuracy;
  return res;
}

/// One-shot projection of already trained weights, no retraining.
inline CoeffStore post_hoc_project(const NetworkSpec& net, const Parameters& trained,
                                   const GroupScheme& scheme) {
  return project_parameters(net, trained, scheme);
}

}  // namespace polyapprox
