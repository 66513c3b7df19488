#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gopforge/error.hpp"
#include "gopforge/layers.hpp"
#include "gopforge/loss.hpp"
#include "oracles.hpp"

using namespace gopforge;

TEST(Loss, MseValueAndGradient) {
  const Matrix p = Matrix::from_rows({{0.2, 0.8}, {0.6, 0.1}});
  const Matrix t = Matrix::from_rows({{0, 1}, {1, 0}});
  const double expected = (0.04 + 0.04 + 0.16 + 0.01) / 4.0;
  EXPECT_NEAR(loss_forward(LossKind::kMse, p, t), expected, 1e-15);
  Matrix q = p;
  const Matrix g = loss_backward(LossKind::kMse, q, t);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      auto f = [&] { return loss_forward(LossKind::kMse, q, t); };
      EXPECT_NEAR(g(i, j), oracle::central_difference(f, q(i, j), 1e-6), 1e-9);
    }
}

TEST(Loss, CrossEntropyGradientIsWithRespectToLogits) {
  std::mt19937_64 gen(4);
  Matrix logits = oracle::random_matrix(gen, 3, 4, -2.0, 2.0);
  const std::vector<std::size_t> labels{1, 3, 0};
  const Matrix t = one_hot(labels, 4);
  const Matrix g = loss_backward(LossKind::kCrossEntropy, softmax_rows(logits), t);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      auto f = [&] { return loss_forward(LossKind::kCrossEntropy, softmax_rows(logits), t); };
      EXPECT_NEAR(g(i, j), oracle::central_difference(f, logits(i, j), 1e-6), 1e-8);
    }
}

TEST(Loss, ShapeMismatchThrows) {
  EXPECT_THROW(loss_forward(LossKind::kMse, Matrix(2, 2), Matrix(2, 3)), ShapeError);
}

TEST(Loss, ArgmaxAccuracyOneHot) {
  const Matrix s = Matrix::from_rows({{0.1, 0.9}, {0.5, 0.5}, {0.7, 0.3}});
  EXPECT_EQ(argmax_rows(s), (std::vector<std::size_t>{1, 0, 0}));
  const std::vector<std::size_t> labels{1, 1, 0};
  EXPECT_NEAR(accuracy(s, labels), 2.0 / 3.0, 1e-15);
  const Matrix oh = one_hot(labels, 3);
  for (std::size_t r = 0; r < oh.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) sum += oh(r, c);
    EXPECT_EQ(sum, 1.0);
    EXPECT_EQ(oh(r, labels[r]), 1.0);
  }
  const std::vector<std::size_t> bad{3};
  EXPECT_THROW(one_hot(bad, 3), ValidationError);
  EXPECT_EQ(parse_loss(to_string(LossKind::kCrossEntropy)), LossKind::kCrossEntropy);
}
