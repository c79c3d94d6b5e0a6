// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polyapprox/error.hpp"

namespace polyapprox {

inline constexpr int kMaxDegree = 2;

/// Least-squares operator for a degree-d polynomial over the abscissae
/// x = 0, 1, ..., width-1. Row k of `rows` maps a group of values to its
/// k-th coefficient, i.e. the matrix (X^T X)^-1 X^T for the Vandermonde X.
struct DesignOperator {
  int degree = 1;
  std::size_t width = 0;
  std::vector<double> rows;  // (degree+1) x width, row-major

  std::span<const double> row(int k) const {
    return std::span<const double>(rows).subspan(static_cast<std::size_t>(k) * width, width);
  }
};

inline DesignOperator make_design_operator(std::size_t width, int degree) {
  if (degree < 1 || degree > kMaxDegree) {
    throw Error(errc::kInvalidArgument, "polynomial degree must be 1 or 2, got " +
                                            std::to_string(degree));
  }
  const std::size_t n = static_cast<std::size_t>(degree) + 1;
  if (width < n) {
    throw Error(errc::kInvalidArgument,
                "group of " + std::to_string(width) + " values cannot determine a degree-" +
                    std::to_string(degree) + " polynomial");
  }
  // Normal matrix entries are power sums of small integers, exact in long double.
  std::array<std::array<long double, 2 * (kMaxDegree + 1)>, kMaxDegree + 1> aug{};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0;
      for (std::size_t x = 0; x < width; ++x) {
        long double p = 1;
        for (std::size_t e = 0; e < i + j; ++e) p *= static_cast<long double>(x);
        s += p;
      }
      aug[i][j] = s;
    }
    aug[i][n + i] = 1;
  }
  // Gauss-Jordan with partial pivoting on the (tiny, SPD) normal matrix.
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(static_cast<double>(aug[r][col])) >
          std::abs(static_cast<double>(aug[piv][col]))) {
        piv = r;
      }
    }
    std::swap(aug[col], aug[piv]);
    const long double d = aug[col][col];
    for (std::size_t j = 0; j < 2 * n; ++j) aug[col][j] /= d;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const long double f = aug[r][col];
      for (std::size_t j = 0; j < 2 * n; ++j) aug[r][j] -= f * aug[col][j];
    }
  }
  DesignOperator op;
  op.degree = degree;
  op.width = width;
  op.rows.assign(n * width, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t x = 0; x < width; ++x) {
      long double s = 0;
      long double p = 1;
      for (std::size_t j = 0; j < n; ++j) {
        s += aug[k][n + j] * p;
        p *= static_cast<long double>(x);
      }
      op.rows[k * width + x] = static_cast<double>(s);
    }
  }
  return op;
}

/// (width, degree) -> DesignOperator, built on first use. The abscissae
/// never change during training, so each operator is computed once.
/// Lookups take a shared lock; references stay valid for the cache lifetime.
class DesignCache {
 public:
  const DesignOperator& get(std::size_t width, int degree) const {
    const Key key{width, degree};
    {
      std::shared_lock lock(mutex_);
      auto it = ops_.find(key);
      if (it != ops_.end()) return it->second;
    }
    DesignOperator op = make_design_operator(width, degree);
    std::unique_lock lock(mutex_);
    return ops_.try_emplace(key, std::move(op)).first->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return ops_.size();
  }

  static DesignCache& shared() {
    static DesignCache cache;
    return cache;
  }

 private:
  using Key = std::pair<std::size_t, int>;
  mutable std::shared_mutex mutex_;
  mutable std::map<Key, DesignOperator> ops_;
};

/// Least-squares coefficients [c0, c1(, c2)] of `ys` over x = 0..n-1.
inline void fit_poly_group(std::span<const double> ys, const DesignOperator& op,
                           std::span<double> coeffs) {
  for (int k = 0; k <= op.degree; ++k) {
    const auto r = op.row(k);
    double s = 0.0;
    for (std::size_t x = 0; x < ys.size(); ++x) s += r[x] * ys[x];
    coeffs[static_cast<std::size_t>(k)] = s;
  }
}

inline std::vector<double> fit_poly_group(std::span<const double> ys, int degree,
                                          const DesignCache& cache = DesignCache::shared()) {
  const DesignOperator& op = cache.get(ys.size(), degree);
  std::vector<double> c(static_cast<std::size_t>(degree) + 1);
  fit_poly_group(ys, op, c);
  return c;
}

/// c0 + c1 x (+ c2 x^2). Every reconstruction path goes through here so
/// reconstructed weights agree bitwise.
inline double eval_poly(std::span<const double> coeffs, std::size_t x) {
  const double xv = static_cast<double>(x);
  double v = coeffs[0] + coeffs[1] * xv;
  if (coeffs.size() > 2) v += coeffs[2] * (xv * xv);
  return v;
}

}  // namespace polyapprox
