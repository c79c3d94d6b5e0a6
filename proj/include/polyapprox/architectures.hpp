// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "polyapprox/error.hpp"
#include "polyapprox/network.hpp"

namespace polyapprox::arch {

/// 784-64-32-10, sigmoid hidden units, softmax output.
inline NetworkSpec mnist_fc_64_32() {
  return NetworkSpec({28, 28, 1},
                     {Flatten{}, Dense{784, 64}, Activation{ActivationFn::sigmoid},
                      Dense{64, 32}, Activation{ActivationFn::sigmoid}, Dense{32, 10},
                      Softmax{}},
                     "mnist_fc_64_32");
}

/// 6c5 -> pool -> 12c5 -> pool -> 192 -> 10, sigmoid throughout.
inline NetworkSpec mnist_cnn() {
  return NetworkSpec({28, 28, 1},
                     {Conv2D{6, 5, 5}, Activation{ActivationFn::sigmoid}, AvgPool2{},
                      Conv2D{12, 5, 5}, Activation{ActivationFn::sigmoid}, AvgPool2{},
                      Flatten{}, Dense{192, 10}, Softmax{}},
                     "mnist_cnn");
}

/// Three padded 5x5 conv stages (32, 64, 128 kernels) with relu and 2x2
/// mean pooling, then 2048 -> 128 -> 10.
inline NetworkSpec cifar_cnn() {
  return NetworkSpec({32, 32, 3},
                     {Conv2D{32, 5, 5, 2}, Activation{ActivationFn::relu}, AvgPool2{},
                      Conv2D{64, 5, 5, 2}, Activation{ActivationFn::relu}, AvgPool2{},
                      Conv2D{128, 5, 5, 2}, Activation{ActivationFn::relu}, AvgPool2{},
                      Flatten{}, Dense{2048, 128}, Activation{ActivationFn::relu},
                      Dense{128, 10}, Softmax{}},
                     "cifar_cnn");
}

/// Full-size reference MLP (784-300-100-10), used as the 32-bit baseline.
inline NetworkSpec lenet_300_100() {
  return NetworkSpec({28, 28, 1},
                     {Flatten{}, Dense{784, 300}, Activation{ActivationFn::sigmoid},
                      Dense{300, 100}, Activation{ActivationFn::sigmoid}, Dense{100, 10},
                      Softmax{}},
                     "lenet_300_100");
}

/// Reference LeNet-5 (20c5, 50c5, 800-500-10; 430.5k weights). Only used for
/// parameter and memory baselines, so mean pooling stands in for max pooling.
inline NetworkSpec lenet5() {
  return NetworkSpec({28, 28, 1},
                     {Conv2D{20, 5, 5}, AvgPool2{}, Conv2D{50, 5, 5}, AvgPool2{}, Flatten{},
                      Dense{800, 500}, Activation{ActivationFn::relu}, Dense{500, 10},
                      Softmax{}},
                     "lenet5");
}

inline std::vector<std::string> names() {
  return {"mnist_fc_64_32", "mnist_cnn", "cifar_cnn", "lenet_300_100", "lenet5"};
}

inline NetworkSpec by_name(const std::string& name) {
  if (name == "mnist_fc_64_32") return mnist_fc_64_32();
  if (name == "mnist_cnn") return mnist_cnn();
  if (name == "cifar_cnn") return cifar_cnn();
  if (name == "lenet_300_100") return lenet_300_100();
  if (name == "lenet5") return lenet5();
  throw Error(errc::kInvalidConfig, "unknown architecture '" + name + "'");
}

}  // namespace polyapprox::arch
