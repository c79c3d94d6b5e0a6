// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace polyapprox;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 8;
  c.learning_rate = 0.5;
  c.seed = 4;
  return c;
}

}  // namespace

TEST(Training, DeterministicForSeed) {
  const Dataset tr = testutil::quadrant_dataset(96, 1), te = testutil::quadrant_dataset(40, 2);
  const NetworkSpec net = testutil::tiny_mlp();
  const GroupScheme s{{LayerScheme::flat(1, 4), LayerScheme::none()}};
  const TrainResult a = train(net, s, tr, te, small_config());
  const TrainResult b = train(net, s, tr, te, small_config());
  EXPECT_TRUE(a.params.same_values(b.params));
  EXPECT_EQ(a.log.to_csv(), b.log.to_csv());
  TrainConfig other = small_config();
  other.seed = 5;
  EXPECT_FALSE(a.params.same_values(train(net, s, tr, te, other).params));
}

TEST(Training, LearnsQuadrants) {
  const Dataset tr = testutil::quadrant_dataset(400, 3), te = testutil::quadrant_dataset(100, 4);
  TrainConfig c = small_config();
  c.epochs = 15;
  const TrainResult r = train(testutil::tiny_mlp(), GroupScheme::none(testutil::tiny_mlp()), tr, te, c);
  EXPECT_GT(r.final_accuracy, 0.9);
  EXPECT_EQ(r.log.epochs.size(), 15u);
}

TEST(Training, WeightsStayPolynomialAfterEveryBatch) {
  const Dataset tr = testutil::quadrant_dataset(64, 5), te = testutil::quadrant_dataset(16, 6);
  const NetworkSpec net = testutil::tiny_cnn();
  Dataset tr6, te6;  // tiny_cnn wants 6x6x2 images
  for (const Dataset* src : {&tr, &te}) {
    Dataset& dst = src == &tr ? tr6 : te6;
    dst.image_shape = {6, 6, 2};
    Rng rng(7);
    for (std::size_t i = 0; i < src->size(); ++i) {
      for (int k = 0; k < 72; ++k) dst.pixels.push_back(rng.uniform01());
      dst.labels.push_back(static_cast<std::uint8_t>(src->labels[i] % 3));
    }
  }
  const GroupScheme s{{LayerScheme::rows(1, 3), LayerScheme::flat(2, 5), LayerScheme::none()}};
  const auto layouts = make_layouts(net, s);
  // Batch size equal to the set gives one update per epoch; check after each.
  TrainConfig c = small_config();
  c.batch_size = 64;
  for (std::size_t e = 1; e <= 3; ++e) {
    c.epochs = e;
    const TrainResult r = train(net, s, tr6, te6, c);
    Parameters again = r.params;
    apply_projection(again, layouts);
    for (std::size_t l = 0; l < again.layers.size(); ++l) {
      EXPECT_LT(max_abs_diff(again.layers[l].weights.data(), r.params.layers[l].weights.data()), 1e-12);
    }
    EXPECT_EQ(evaluate(net, r.params, te6), evaluate(net, r.store, te6));
  }
}

TEST(Training, MinimalGroupsMatchUnconstrained) {
  const Dataset tr = testutil::quadrant_dataset(80, 8), te = testutil::quadrant_dataset(20, 9);
  const NetworkSpec net = testutil::tiny_mlp();
  const TrainResult a = train(net, GroupScheme::none(testutil::tiny_mlp()), tr, te, small_config());
  const TrainResult b =
      train(net, GroupScheme{{LayerScheme::flat(1, 2), LayerScheme::flat(2, 3)}}, tr, te, small_config());
  EXPECT_TRUE(a.params.same_values(b.params));
}

TEST(Training, DivergenceReported) {
  const Dataset tr = testutil::quadrant_dataset(64, 10), te = testutil::quadrant_dataset(8, 11);
  TrainConfig c = small_config();
  c.learning_rate = 1e308;  // logits overflow after a few updates
  try {
    train(testutil::tiny_mlp(), GroupScheme::none(testutil::tiny_mlp()), tr, te, c);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::kDiverged);
  }
}

TEST(Training, ZeroEpochsReturnsInitialModel) {
  const Dataset tr = testutil::quadrant_dataset(16, 12), te = testutil::quadrant_dataset(16, 13);
  TrainConfig c = small_config();
  c.epochs = 0;
  const NetworkSpec net = testutil::tiny_mlp();
  const TrainResult r = train(net, GroupScheme::none(testutil::tiny_mlp()), tr, te, c);
  EXPECT_TRUE(r.log.epochs.empty());
  EXPECT_TRUE(r.params.same_values(init_parameters(net, c.seed)));
  EXPECT_EQ(r.final_accuracy, r.initial_accuracy);
}

TEST(Training, BadConfigRejected) {
  const Dataset tr = testutil::quadrant_dataset(16, 14);
  TrainConfig c = small_config();
  c.batch_size = 0;
  EXPECT_THROW(train(testutil::tiny_mlp(), GroupScheme::none(testutil::tiny_mlp()), tr, tr, c), Error);
  c = small_config();
  c.learning_rate = -1;
  EXPECT_THROW(train(testutil::tiny_mlp(), GroupScheme::none(testutil::tiny_mlp()), tr, tr, c), Error);
}

TEST(Metrics, CsvRoundTrip) {
  MetricsLog log;
  log.epochs.push_back({1, 0.1234567890123456789, 0.5});
  log.epochs.push_back({2, 1.0 / 3.0, 0.987654321});
  const MetricsLog back = MetricsLog::from_csv(log.to_csv());
  ASSERT_EQ(back.epochs.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.epochs[i].epoch, log.epochs[i].epoch);
    EXPECT_EQ(back.epochs[i].train_loss, log.epochs[i].train_loss);
    EXPECT_EQ(back.epochs[i].test_accuracy, log.epochs[i].test_accuracy);
  }
  EXPECT_THROW(MetricsLog::from_csv("nope\n"), Error);
}

TEST(PostHoc, ProjectsWithoutRetraining) {
  const NetworkSpec net = testutil::tiny_mlp();
  const Parameters p = init_parameters(net, 3);
  const GroupScheme s{{LayerScheme::flat(1, 4), LayerScheme::flat(1, 4)}};
  const CoeffStore a = post_hoc_project(net, p, s);
  EXPECT_TRUE(reconstruct_parameters(net, a).same_values(
      reconstruct_parameters(net, project_parameters(net, p, s))));
}
