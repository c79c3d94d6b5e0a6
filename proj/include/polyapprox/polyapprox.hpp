// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "polyapprox/architectures.hpp"
#include "polyapprox/checkpoint.hpp"
#include "polyapprox/container.hpp"
#include "polyapprox/cost.hpp"
#include "polyapprox/datasets.hpp"
#include "polyapprox/error.hpp"
#include "polyapprox/experiment.hpp"
#include "polyapprox/factored.hpp"
#include "polyapprox/network.hpp"
#include "polyapprox/ops.hpp"
#include "polyapprox/polyfit.hpp"
#include "polyapprox/projection.hpp"
#include "polyapprox/report.hpp"
#include "polyapprox/rng.hpp"
#include "polyapprox/svg.hpp"
#include "polyapprox/tensor.hpp"
#include "polyapprox/training.hpp"
