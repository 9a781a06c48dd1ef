#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "advreg/graph.hpp"
#include "advreg/rng.hpp"

using advreg::Graph;
using advreg::NodeId;
using advreg::Rng;
using advreg::Tensor;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST(GradReverse, ForwardIsBitIdentical) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Rng sub = rng.derive(static_cast<std::uint64_t>(trial));
    Tensor x = random_tensor({2, 3, 4, 5}, sub);
    Graph g;
    NodeId in = g.leaf(x);
    NodeId out = g.grad_reverse(in, 0.5);
    EXPECT_EQ(g.value(out), x);
  }
}

TEST(GradReverse, BackwardScalesByMinusLambda) {
  Graph g;
  NodeId x = g.leaf(Tensor::of({1.5, -2.0}));
  NodeId y = g.grad_reverse(x, 0.5);
  EXPECT_EQ(g.value(y), Tensor::of({1.5, -2.0}));

  // Route per-element upstream gradients [1, 2] via a weighted sum.
  NodeId w = g.leaf(Tensor::of({1.0, 2.0}));
  NodeId loss = g.sum(g.mul(y, w));
  auto grads = g.backward(loss);
  EXPECT_EQ(grads.at(x), Tensor::of({-0.5, -1.0}));
}

TEST(GradReverse, LambdaZeroBlocksGradient) {
  Graph g;
  NodeId x = g.leaf(Tensor::of({3.0, -1.0, 2.5}));
  NodeId y = g.grad_reverse(x, 0.0);
  NodeId w = g.leaf(Tensor::of({1.0, 4.0, -2.0}));
  NodeId loss = g.sum(g.mul(y, w));
  auto grads = g.backward(loss);
  EXPECT_EQ(grads.at(x), Tensor::zeros({3}));
}

TEST(GradReverse, NegativeLambdaRejected) {
  Graph g;
  NodeId x = g.leaf(Tensor::of({1.0}));
  EXPECT_THROW(g.grad_reverse(x, -0.1), advreg::ConfigError);
}

TEST(Conv2d, OneByOneIdentityKernel) {
  Rng rng(3);
  Tensor x = random_tensor({1, 1, 4, 4}, rng);
  Graph g;
  NodeId out = g.conv2d(g.leaf(x), g.leaf(Tensor({1, 1, 1, 1}, {1.0})),
                        g.leaf(Tensor({1})), 1);
  EXPECT_EQ(g.value(out), x);
}

TEST(Conv2d, TwoByTwoOnesSamePadding) {
  Graph g;
  NodeId out = g.conv2d(g.leaf(Tensor::full({1, 1, 2, 2}, 1.0)),
                        g.leaf(Tensor::full({1, 1, 2, 2}, 1.0)),
                        g.leaf(Tensor({1})), 1);
  ASSERT_EQ(g.value(out).shape(), (std::vector<int>{1, 1, 2, 2}));
  EXPECT_DOUBLE_EQ(g.value(out)[0], 4.0);  // top-left window covers all four ones
}

TEST(Conv2d, SamePaddingOutputIsCeilOfStride) {
  Rng rng(4);
  Tensor x = random_tensor({2, 3, 7, 5}, rng);
  Tensor w = random_tensor({4, 3, 3, 3}, rng);
  Tensor b = random_tensor({4}, rng);
  Graph g;
  NodeId out = g.conv2d(g.leaf(x), g.leaf(w), g.leaf(b), 2);
  EXPECT_EQ(g.value(out).shape(), (std::vector<int>{2, 4, 4, 3}));
}

TEST(Conv2d, ShapeErrors) {
  Graph g;
  NodeId x = g.leaf(Tensor({1, 2, 4, 4}));
  NodeId w_bad = g.leaf(Tensor({3, 1, 3, 3}));  // channel mismatch
  NodeId b = g.leaf(Tensor({3}));
  EXPECT_THROW(g.conv2d(x, w_bad, b, 1), advreg::ShapeError);
  NodeId w_ok = g.leaf(Tensor({3, 2, 3, 3}));
  EXPECT_THROW(g.conv2d(x, w_ok, b, 0), advreg::ShapeError);
  EXPECT_THROW(g.conv2d(x, w_ok, b, -2), advreg::ShapeError);
}

TEST(Dense, IdentityWeightsPassThrough) {
  Rng rng(5);
  Tensor x = random_tensor({3, 4}, rng);
  Tensor w({4, 4});
  for (int i = 0; i < 4; ++i) w[static_cast<std::size_t>(i * 4 + i)] = 1.0;
  Graph g;
  NodeId out = g.dense(g.leaf(x), g.leaf(w), g.leaf(Tensor({4})));
  EXPECT_EQ(g.value(out), x);
}

TEST(Dense, ZeroWeightsGiveBiasRows) {
  Graph g;
  NodeId out = g.dense(g.leaf(Tensor({3, 4})), g.leaf(Tensor({4, 2})),
                       g.leaf(Tensor::of({0.3, -0.7})));
  const Tensor& y = g.value(out);
  ASSERT_EQ(y.shape(), (std::vector<int>{3, 2}));
  for (int r = 0; r < 3; ++r) {
    EXPECT_DOUBLE_EQ(y[static_cast<std::size_t>(r * 2)], 0.3);
    EXPECT_DOUBLE_EQ(y[static_cast<std::size_t>(r * 2 + 1)], -0.7);
  }
}

TEST(Dense, InnerDimensionMismatchRejected) {
  Graph g;
  EXPECT_THROW(
      g.dense(g.leaf(Tensor({2, 3})), g.leaf(Tensor({4, 2})), g.leaf(Tensor({2}))),
      advreg::ShapeError);
}

TEST(Relu, DefinitionAndSubgradient) {
  Graph g;
  NodeId x = g.leaf(Tensor::of({-1.0, 0.0, 2.0}));
  NodeId y = g.relu(x);
  EXPECT_EQ(g.value(y), Tensor::of({0.0, 0.0, 2.0}));
  auto grads = g.backward(g.sum(y));
  EXPECT_EQ(grads.at(x), Tensor::of({0.0, 0.0, 1.0}));  // subgradient at 0 is 0
}

TEST(Relu, Idempotence) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Rng sub = rng.derive(static_cast<std::uint64_t>(trial));
    Tensor x = random_tensor({2, 17}, sub);
    Graph g;
    NodeId once = g.relu(g.leaf(x));
    NodeId twice = g.relu(once);
    EXPECT_EQ(g.value(once), g.value(twice));
  }
}

TEST(GlobalAvgPool, ConstantMapAndShape) {
  Graph g;
  NodeId out = g.global_avg_pool(g.leaf(Tensor::full({2, 8, 5, 5}, 3.0)));
  ASSERT_EQ(g.value(out).shape(), (std::vector<int>{2, 8}));
  for (std::size_t i = 0; i < g.value(out).size(); ++i)
    EXPECT_DOUBLE_EQ(g.value(out)[i], 3.0);
}

TEST(GlobalAvgPool, BackwardSpreadsUniformly) {
  Rng rng(7);
  Tensor x = random_tensor({1, 1, 5, 5}, rng);
  Graph g;
  NodeId in = g.leaf(x);
  NodeId loss = g.sum(g.global_avg_pool(in));
  auto grads = g.backward(loss);
  for (std::size_t i = 0; i < 25; ++i)
    EXPECT_DOUBLE_EQ(grads.at(in)[i], 0.04);  // 1/25
}

TEST(SoftmaxCrossEntropy, UniformLogitsBinaryLoss) {
  Graph g;
  NodeId loss = g.softmax_cross_entropy(g.leaf(Tensor({3, 2})), {0, 1, 0});
  EXPECT_NEAR(g.value(loss)[0], std::log(2.0), 1e-12);
}

TEST(SoftmaxCrossEntropy, SaturatedCorrectPrediction) {
  Graph g;
  NodeId loss = g.softmax_cross_entropy(g.leaf(Tensor({1, 2}, {100.0, 0.0})), {0});
  EXPECT_LT(g.value(loss)[0], 1e-6);
  EXPECT_GE(g.value(loss)[0], 0.0);
}

TEST(SoftmaxCrossEntropy, GradientIsSoftmaxMinusOneHotOverBatch) {
  Graph g;
  NodeId logits = g.leaf(Tensor({2, 2}, {0.0, 0.0, 2.0, -2.0}));
  NodeId loss = g.softmax_cross_entropy(logits, {0, 1});
  auto grads = g.backward(loss);
  const Tensor& d = grads.at(logits);
  EXPECT_NEAR(d[0], (0.5 - 1.0) / 2.0, 1e-12);
  EXPECT_NEAR(d[1], 0.5 / 2.0, 1e-12);
  const double p = 1.0 / (1.0 + std::exp(-4.0));
  EXPECT_NEAR(d[2], p / 2.0, 1e-12);
  EXPECT_NEAR(d[3], (1.0 - p - 1.0) / 2.0, 1e-12);
}

TEST(SoftmaxCrossEntropy, OutOfRangeLabelRejected) {
  Graph g;
  NodeId logits = g.leaf(Tensor({2, 3}));
  EXPECT_THROW(g.softmax_cross_entropy(logits, {0, 3}), advreg::InputError);
  EXPECT_THROW(g.softmax_cross_entropy(logits, {-1, 0}), advreg::InputError);
}

TEST(Graph, ForwardValuesStayFiniteOnFiniteInputs) {
  Rng rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    Rng sub = rng.derive(static_cast<std::uint64_t>(trial));
    Graph g;
    NodeId x = g.leaf(random_tensor({2, 3, 6, 6}, sub));
    NodeId w = g.leaf(random_tensor({4, 3, 3, 3}, sub));
    NodeId b = g.leaf(random_tensor({4}, sub));
    NodeId scale = g.leaf(Tensor::full({4}, 1.0));
    NodeId shift = g.leaf(Tensor({4}));
    NodeId h = g.relu(g.batch_norm(g.conv2d(x, w, b, 2), scale, shift,
                                   advreg::BnMode::kTrain, 1e-5));
    NodeId pooled = g.global_avg_pool(h);
    NodeId loss = g.softmax_cross_entropy(
        g.dense(pooled, g.leaf(random_tensor({4, 2}, sub)), g.leaf(Tensor({2}))),
        {0, 1});
    for (NodeId id = 0; id < g.node_count(); ++id)
      EXPECT_TRUE(g.value(id).all_finite());
    EXPECT_TRUE(g.value(loss).all_finite());
  }
}

TEST(Graph, NonScalarLossRejected) {
  Graph g;
  NodeId x = g.leaf(Tensor({2, 2}));
  EXPECT_THROW(g.backward(x), advreg::ContractError);
}

TEST(Graph, TopologicalOrderByConstruction) {
  Graph g;
  NodeId a = g.leaf(Tensor::of({1.0}));
  NodeId b = g.scale(a, 2.0);
  NodeId c = g.add(a, b);
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
}
