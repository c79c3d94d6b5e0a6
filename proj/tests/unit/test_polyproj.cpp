// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "helpers.hpp"

using namespace polyapprox;
using testutil::random_tensor;
using testutil::random_vec;

namespace {

// Least squares through Householder QR on the Vandermonde matrix.
std::vector<double> qr_fit(const std::vector<double>& ys, int degree) {
  const Eigen::Index n = static_cast<Eigen::Index>(ys.size());
  Eigen::MatrixXd X(n, degree + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (int k = 0; k <= degree; ++k) X(x, k) = std::pow(static_cast<double>(x), k);
    y(x) = ys[static_cast<std::size_t>(x)];
  }
  const Eigen::VectorXd c = X.householderQr().solve(y);
  return {c.data(), c.data() + c.size()};
}

double residual(const std::vector<double>& ys, const std::vector<double>& c) {
  double s = 0;
  for (std::size_t x = 0; x < ys.size(); ++x) {
    const double d = ys[x] - eval_poly(c, x);
    s += d * d;
  }
  return s;
}

}  // namespace

TEST(PolyFit, MatchesQrOracle) {
  Rng rng(1);
  for (int degree = 1; degree <= 2; ++degree) {
    for (std::size_t w = static_cast<std::size_t>(degree) + 1; w <= 40; ++w) {
      const auto ys = random_vec(rng, w);
      const auto c = fit_poly_group(ys, degree);
      const auto ref = qr_fit(ys, degree);
      for (int k = 0; k <= degree; ++k) {
        EXPECT_NEAR(c[static_cast<std::size_t>(k)], ref[static_cast<std::size_t>(k)], 1e-10)
            << "width " << w << " degree " << degree;
      }
    }
  }
}

TEST(PolyFit, LinearFitOfThreePoints) {
  // ys = 1, 2, 6: slope 2.5, intercept 0.5 by hand.
  const auto c = fit_poly_group(std::vector<double>{1, 2, 6}, 1);
  EXPECT_NEAR(c[0], 0.5, 1e-14);
  EXPECT_NEAR(c[1], 2.5, 1e-14);
}

TEST(PolyFit, RecoversExactPolynomials) {
  std::vector<double> ys;
  for (int x = 0; x < 9; ++x) ys.push_back(0.25 - 0.5 * x + 0.125 * x * x);
  const auto c = fit_poly_group(ys, 2);
  EXPECT_NEAR(c[0], 0.25, 1e-12);
  EXPECT_NEAR(c[1], -0.5, 1e-12);
  EXPECT_NEAR(c[2], 0.125, 1e-12);
}

TEST(PolyFit, LeastSquaresBeatsPerturbations) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int degree = 1 + static_cast<int>(rng.below(2));
    const auto ys = random_vec(rng, 3 + rng.below(30));
    const auto c = fit_poly_group(ys, degree);
    const double best = residual(ys, c);
    for (int k = 0; k < 10; ++k) {
      auto q = c;
      for (double& v : q) v += rng.uniform(-1e-3, 1e-3);
      EXPECT_GE(residual(ys, q), best - 1e-15);
    }
  }
}

TEST(PolyFit, RejectsUnderdeterminedAndBadDegree) {
  EXPECT_THROW(make_design_operator(2, 2), Error);
  EXPECT_THROW(make_design_operator(5, 3), Error);
  EXPECT_THROW(make_design_operator(5, 0), Error);
}

TEST(DesignCache, BuildsOnce) {
  DesignCache cache;
  const DesignOperator& a = cache.get(7, 1);
  const DesignOperator& b = cache.get(7, 1);
  EXPECT_EQ(&a, &b);
  cache.get(7, 2);
  EXPECT_EQ(cache.size(), 2u);
}

TEST(Layout, DenseGroupsFollowInputs) {
  const GroupLayout l({3, 10}, false, LayerScheme::flat(1, 4));
  // 10 = 4 + 4 + 2 ; the trailing pair is stored verbatim.
  ASSERT_EQ(l.groups().size(), 9u);
  EXPECT_EQ(l.fitted_groups(), 6u);
  EXPECT_EQ(l.exact_count(), 6u);
  EXPECT_EQ(l.parameter_count(), 18u);
  const WeightGroup& g = l.groups()[4];  // neuron 1, second group
  EXPECT_EQ(g.offset(0), 1u * 10 + 4);
  EXPECT_EQ(g.offset(3), 1u * 10 + 7);
}

TEST(Layout, ConvFilterRowsAreContiguousRows) {
  const std::size_t kh = 3, kw = 5, C = 2, K = 4;
  const GroupLayout l({kh, kw, C, K}, true, LayerScheme::rows(1, kw));
  EXPECT_EQ(l.groups().size(), kh * C * K);
  std::vector<int> seen(kh * kw * C * K, 0);
  for (const auto& g : l.groups()) {
    ASSERT_EQ(g.length, kw);
    // Every element of a group shares (i, c, k) and walks j = 0..kw-1.
    const std::size_t first = g.offset(0);
    const std::size_t k = first % K, c = (first / K) % C, i = first / (K * C * kw);
    for (std::size_t e = 0; e < kw; ++e) {
      const std::size_t idx = ((i * kw + e) * C + c) * K + k;
      EXPECT_EQ(g.offset(e), idx);
      ++seen[idx];
    }
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Layout, ConvFlatCoversKernelSlice) {
  const GroupLayout l({5, 5, 3, 2}, true, LayerScheme::flat(2, 25));
  EXPECT_EQ(l.groups().size(), 6u);
  EXPECT_EQ(l.parameter_count(), 18u);
  const WeightGroup& g = l.groups()[0];
  EXPECT_EQ(g.offset(24), ((4 * 5 + 4) * 3 + 0) * 2 + 0);
}

TEST(Layout, SchemeValidation) {
  EXPECT_THROW(GroupLayout({4, 10}, false, LayerScheme::rows(1, 5)), Error);
  EXPECT_THROW(GroupLayout({5, 5, 1, 1}, true, LayerScheme::rows(1, 4)), Error);
  EXPECT_THROW(GroupLayout({4, 10}, false, LayerScheme::flat(2, 2)), Error);
  EXPECT_THROW(GroupLayout({4, 10}, false, LayerScheme::flat(3, 8)), Error);
}

TEST(Projection, IdempotentAndPolynomial) {
  Rng rng(4);
  for (const auto& [shape, conv, scheme] :
       std::vector<std::tuple<Shape, bool, LayerScheme>>{
           {{7, 30}, false, LayerScheme::flat(1, 8)},
           {{5, 29}, false, LayerScheme::flat(2, 6)},
           {{5, 5, 3, 4}, true, LayerScheme::rows(1, 5)},
           {{5, 5, 3, 4}, true, LayerScheme::rows(2, 5)},
           {{5, 5, 2, 3}, true, LayerScheme::flat(2, 25)},
           {{3, 3, 2, 2}, true, LayerScheme::flat(1, 4)}}) {
    const Tensor w = random_tensor(rng, shape);
    const ProjectedLayer p1 = project_layer(w, conv, scheme);
    const ProjectedLayer p2 = project_layer(p1.approx_weights, conv, scheme);
    EXPECT_LT(max_abs_diff(p1.approx_weights.data(), p2.approx_weights.data()), 1e-12);
    EXPECT_EQ(reconstruct_layer(p1.coeffs), p1.approx_weights);
  }
}

TEST(Projection, ExactInterpolationIsIdentity) {
  Rng rng(5);
  for (int d = 1; d <= 2; ++d) {
    const Tensor w = random_tensor(rng, {6, 21});
    const std::size_t nw = static_cast<std::size_t>(d) + 1;
    EXPECT_EQ(project_layer(w, false, LayerScheme::flat(d, nw)).approx_weights, w);
  }
  const Tensor k = random_tensor(rng, {3, 3, 2, 2});
  EXPECT_EQ(project_layer(k, true, LayerScheme::rows(2, 3)).approx_weights, k);
}

TEST(Projection, ResidualOrthogonalToDesign) {
  Rng rng(6);
  const Tensor w = random_tensor(rng, {1, 12});
  const ProjectedLayer p = project_layer(w, false, LayerScheme::flat(2, 12));
  for (int k = 0; k <= 2; ++k) {
    double dot = 0;
    for (std::size_t x = 0; x < 12; ++x) {
      dot += std::pow(static_cast<double>(x), k) * (w[x] - p.approx_weights[x]);
    }
    EXPECT_NEAR(dot, 0.0, 1e-11);
  }
}

TEST(ParamCount, ReductionIsGroupSizeOverCoefficients) {
  for (int d = 1; d <= 2; ++d) {
    for (std::size_t nw : {4u, 8u, 16u}) {
      const NetworkSpec net({64}, {Dense{64, 10}});
      const ParamCount pc = count_params(GroupScheme{{LayerScheme::flat(d, nw)}}, net);
      EXPECT_DOUBLE_EQ(pc.reduction(), static_cast<double>(nw) / (d + 1));
    }
  }
}

TEST(ParamCount, ReferenceTables) {
  const auto fc = [](const std::string& name) { return count_params(preset(name).resolved_scheme(), preset(name).network()).total; };
  EXPECT_EQ(fc("fc-case0"), 52544u);
  EXPECT_EQ(fc("fc-case1"), 13136u);
  EXPECT_EQ(fc("fc-case3"), 5568u);
  EXPECT_EQ(fc("cnn-case1"), 1420u);
  EXPECT_EQ(fc("cnn-case6"), 294u);
}

TEST(Projection, NetworkRoundTripAndBias) {
  const NetworkSpec net = arch::mnist_cnn();
  Parameters p = init_parameters(net, 3);
  p.layers[2].bias[4] = 0.75;
  const GroupScheme s = preset("cnn-case1").scheme;
  const CoeffStore store = project_parameters(net, p, s);
  EXPECT_EQ(store.parameter_count(), 1420u);
  const Parameters r = reconstruct_parameters(net, store);
  EXPECT_EQ(r.layers[2].bias[4], 0.75);
  Parameters q = p;
  apply_projection(q, make_layouts(net, s));
  EXPECT_TRUE(q.same_values(r));
}

TEST(Container, RoundTripIsBitwise) {
  Rng rng(7);
  const NetworkSpec net = arch::mnist_cnn();
  Parameters p = init_parameters(net, 4);
  for (auto& l : p.layers)
    for (double& b : l.bias) b = rng.uniform(-1, 1);
  for (const char* name : {"cnn-case0", "cnn-case2", "cnn-case6"}) {
    const CoeffStore store = project_parameters(net, p, preset(name).resolved_scheme());
    const auto bytes = serialize(store);
    EXPECT_EQ(deserialize(bytes), store);
  }
}

TEST(Container, RejectsCorruption) {
  const NetworkSpec net = testutil::tiny_mlp();
  const CoeffStore store =
      project_parameters(net, init_parameters(net, 1), GroupScheme{{LayerScheme::flat(1, 4), LayerScheme::none()}});
  auto bytes = serialize(store);
  auto expect_corrupt = [](const std::vector<std::uint8_t>& b) {
    try {
      deserialize(b);
      FAIL() << "accepted corrupt container";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), errc::kCorruptContainer);
    }
  };
  auto bad = bytes;
  bad[0] = 'X';
  expect_corrupt(bad);
  expect_corrupt(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 3));
  bad = bytes;
  bad.push_back(0);
  expect_corrupt(bad);
  bad = bytes;
  bad[8] = 7;  // first layer degree
  expect_corrupt(bad);
  bad = bytes;
  bad[12] = 5;  // group size no longer matches the coefficient count
  expect_corrupt(bad);
  expect_corrupt({});
}

TEST(Container, Q8WithinHalfStep) {
  Rng rng(8);
  const LayerCoeffs lc = testutil::random_coeffs(rng, {8, 40}, false, LayerScheme::flat(1, 8));
  const Q8Layer q = quantize_q8(lc);
  EXPECT_EQ(q.values.size(), lc.parameter_count());
  const auto deq = q.dequantized();
  std::vector<double> all = lc.coefficients;
  all.insert(all.end(), lc.exact.begin(), lc.exact.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_LE(std::abs(deq[i] - all[i]), q.scale / 2 + 1e-15);
  CoeffStore s;
  s.layers.push_back(lc);
  const auto back = import_q8(export_q8(s));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].values, q.values);
  EXPECT_EQ(back[0].scale, q.scale);
}
