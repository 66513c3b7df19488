#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gopforge/error.hpp"
#include "gopforge/operators.hpp"
#include "oracles.hpp"

using namespace gopforge;

TEST(Nodal, DirectValues) {
  EXPECT_EQ(nodal_forward(NodalOp::kMultiplication, 2.0, 3.0), 6.0);
  EXPECT_EQ(nodal_forward(NodalOp::kGaussian, 1.0, 0.0), 1.0);
  EXPECT_EQ(nodal_forward(NodalOp::kDoG, 0.7, 0.0), 0.0);
  EXPECT_EQ(nodal_forward(NodalOp::kExponential, 0.0, 5.0), 0.0);
  EXPECT_DOUBLE_EQ(nodal_forward(NodalOp::kHarmonic, 0.5, 2.0), std::sin(1.0));
  EXPECT_DOUBLE_EQ(nodal_forward(NodalOp::kQuadratic, 1.5, 2.0), 6.0);
}

TEST(Nodal, AnalyticPartials) {
  const NodalGrad m = nodal_backward(NodalOp::kMultiplication, 2.0, 3.0);
  EXPECT_EQ(m.dz_dw, 3.0);
  EXPECT_EQ(m.dz_dy, 2.0);
  const NodalGrad q = nodal_backward(NodalOp::kQuadratic, 1.0, 2.0);
  EXPECT_EQ(q.dz_dw, 4.0);
  EXPECT_EQ(q.dz_dy, 4.0);
}

TEST(Nodal, GaussianAtOneMatchesFiniteDifference) {
  const NodalGrad g = nodal_backward(NodalOp::kGaussian, 1.0, 1.0);
  double w = 1.0;
  double y = 1.0;
  auto f = [&] { return nodal_forward(NodalOp::kGaussian, w, y); };
  const double fd_w = oracle::central_difference(f, w, 1e-6);
  const double fd_y = oracle::central_difference(f, y, 1e-6);
  EXPECT_NEAR(g.dz_dw, fd_w, 1e-8);
  EXPECT_NEAR(g.dz_dy, fd_y, 1e-8);
  EXPECT_NEAR(fd_y, -0.73575888, 1e-7);
}

TEST(Nodal, AllOperatorsMatchFiniteDifferences) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (NodalOp op : kNodalOps) {
    for (int trial = 0; trial < 1000; ++trial) {
      double w = u(gen);
      double y = u(gen);
      const NodalGrad g = nodal_backward(op, w, y);
      auto f = [&] { return nodal_forward(op, w, y); };
      const double fd_w = oracle::central_difference(f, w, 1e-5);
      const double fd_y = oracle::central_difference(f, y, 1e-5);
      ASSERT_LT(oracle::relative_error(g.dz_dw, fd_w, 1e-6), 1e-4)
          << to_string(op) << " w=" << w << " y=" << y;
      ASSERT_LT(oracle::relative_error(g.dz_dy, fd_y, 1e-6), 1e-4)
          << to_string(op) << " w=" << w << " y=" << y;
    }
  }
}

TEST(Nodal, ExpArgumentIsClamped) {
  const double big = nodal_forward(NodalOp::kExponential, 100.0, 100.0);
  EXPECT_DOUBLE_EQ(big, std::exp(50.0) - 1.0);
  const double g = nodal_forward(NodalOp::kGaussian, -10.0, 10.0);
  EXPECT_DOUBLE_EQ(g, -10.0 * std::exp(50.0));
  const NodalGrad d = nodal_backward(NodalOp::kGaussian, -10.0, 10.0);
  EXPECT_TRUE(std::isfinite(d.dz_dw));
  EXPECT_TRUE(std::isfinite(d.dz_dy));
}

TEST(Nodal, NonFiniteInputThrows) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(nodal_forward(NodalOp::kMultiplication, nan, 1.0), NumericError);
  EXPECT_THROW(nodal_backward(NodalOp::kDoG, 1.0, std::numeric_limits<double>::infinity()), NumericError);
  EXPECT_THROW(act_forward(ActOp::kTanh, nan), NumericError);
}

TEST(Pool, DirectValues) {
  EXPECT_EQ(pool_forward(PoolOp::kSummation, std::vector{1.0, 2.0, 3.0}), 6.0);
  EXPECT_EQ(pool_forward(PoolOp::kCorrelation1, std::vector{1.0, 2.0, 3.0}), 8.0);
  EXPECT_EQ(pool_forward(PoolOp::kCorrelation2, std::vector{1.0, 2.0, 3.0, 4.0}), 30.0);
  EXPECT_EQ(pool_forward(PoolOp::kMaximum, std::vector{1.0, 3.0, 2.0}), 3.0);
}

TEST(Pool, Gradients) {
  EXPECT_EQ(pool_backward(PoolOp::kSummation, std::vector{5.0, 7.0}), (std::vector{1.0, 1.0}));
  EXPECT_EQ(pool_backward(PoolOp::kCorrelation1, std::vector{1.0, 2.0, 3.0}), (std::vector{2.0, 4.0, 2.0}));
  EXPECT_EQ(pool_backward(PoolOp::kMaximum, std::vector{2.0, 5.0, 5.0}), (std::vector{0.0, 1.0, 0.0}));
}

TEST(Pool, GradientsMatchFiniteDifferences) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (PoolOp op : kPoolOps) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> z(2 + trial % 6);
      if (z.size() < pool_arity_floor(op)) z.resize(pool_arity_floor(op));
      for (auto& v : z) v = u(gen);
      const auto g = pool_backward(op, z);
      ASSERT_EQ(g.size(), z.size());
      for (std::size_t k = 0; k < z.size(); ++k) {
        auto f = [&] { return pool_forward(op, z); };
        const double fd = oracle::central_difference(f, z[k], 1e-5);
        ASSERT_LT(oracle::relative_error(g[k], fd, 1e-6), 1e-4) << to_string(op) << " k=" << k;
      }
    }
  }
}

TEST(Pool, ArityFloorViolationNamesOperator) {
  try {
    pool_forward(PoolOp::kCorrelation2, std::vector{1.0, 2.0});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("2-correlation"), std::string::npos);
  }
  EXPECT_THROW(pool_backward(PoolOp::kCorrelation1, std::vector{1.0}), ValidationError);
  EXPECT_THROW(pool_forward(PoolOp::kSummation, std::vector<double>{}), ValidationError);
  EXPECT_EQ(pool_arity_floor(PoolOp::kSummation), 1u);
  EXPECT_EQ(pool_arity_floor(PoolOp::kMaximum), 1u);
  EXPECT_EQ(pool_arity_floor(PoolOp::kCorrelation1), 2u);
  EXPECT_EQ(pool_arity_floor(PoolOp::kCorrelation2), 3u);
}

TEST(Pool, MultiplicationSummationIsInnerProduct) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(17), y(17), z(17);
    double dot = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] = u(gen);
      y[k] = u(gen);
      z[k] = nodal_forward(NodalOp::kMultiplication, w[k], y[k]);
      dot += w[k] * y[k];
    }
    EXPECT_NEAR(pool_forward(PoolOp::kSummation, z), dot, 1e-12);
  }
}

TEST(Act, DirectValues) {
  EXPECT_EQ(act_forward(ActOp::kSigmoid, 0.0), 0.5);
  EXPECT_EQ(act_backward(ActOp::kSigmoid, 0.0), 0.25);
  EXPECT_EQ(act_forward(ActOp::kReLU, -3.0), 0.0);
  EXPECT_EQ(act_backward(ActOp::kReLU, -3.0), 0.0);
  EXPECT_EQ(act_backward(ActOp::kReLU, 0.0), 0.0);
  EXPECT_EQ(act_forward(ActOp::kTanh, 0.0), 0.0);
  EXPECT_EQ(act_backward(ActOp::kTanh, 0.0), 1.0);
}

TEST(Act, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (ActOp op : kActOps) {
    for (int trial = 0; trial < 1000; ++trial) {
      double x = u(gen);
      if (op == ActOp::kReLU && std::abs(x) < 1e-4) continue;
      auto f = [&] { return act_forward(op, x); };
      const double fd = oracle::central_difference(f, x, 1e-5);
      ASSERT_LT(oracle::relative_error(act_backward(op, x), fd, 1e-6), 1e-4) << to_string(op) << " x=" << x;
    }
  }
}

TEST(Act, MonotoneNondecreasing) {
  for (ActOp op : kActOps) {
    double prev = act_forward(op, -60.0);
    for (double x = -60.0; x <= 60.0; x += 0.25) {
      const double v = act_forward(op, x);
      EXPECT_GE(v, prev) << to_string(op);
      prev = v;
    }
  }
}

TEST(Library, CanonicalEnumeration) {
  const auto& lib = enumerate_library();
  ASSERT_EQ(lib.size(), 72u);
  EXPECT_EQ(lib[0].nodal, NodalOp::kMultiplication);
  EXPECT_EQ(lib[0].pool, PoolOp::kSummation);
  EXPECT_EQ(lib[0].act, ActOp::kSigmoid);
  EXPECT_EQ(lib[71].nodal, NodalOp::kDoG);
  EXPECT_EQ(lib[71].pool, PoolOp::kMaximum);
  EXPECT_EQ(lib[71].act, ActOp::kReLU);
  for (std::size_t i = 0; i < lib.size(); ++i) {
    EXPECT_EQ(lib[i].index, i);
    EXPECT_EQ(static_cast<std::size_t>(lib[i].nodal), i / 12);
    EXPECT_EQ(static_cast<std::size_t>(lib[i].pool), (i / 3) % 4);
    EXPECT_EQ(static_cast<std::size_t>(lib[i].act), i % 3);
    EXPECT_EQ(make_opset(lib[i].nodal, lib[i].pool, lib[i].act), lib[i]);
    EXPECT_EQ(opset_at(i), lib[i]);
  }
  EXPECT_THROW(opset_at(72), ValidationError);
}

TEST(Library, NamesRoundTrip) {
  EXPECT_EQ(to_string(enumerate_library()[0]), "multiplication/summation/sigmoid");
  EXPECT_EQ(to_string(enumerate_library()[71]), "dog/maximum/relu");
  const char* pools[] = {"summation", "1-correlation", "2-correlation", "maximum"};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(to_string(kPoolOps[i]), pools[i]);
  for (NodalOp op : kNodalOps) EXPECT_EQ(parse_nodal(to_string(op)), op);
  for (PoolOp op : kPoolOps) EXPECT_EQ(parse_pool(to_string(op)), op);
  for (ActOp op : kActOps) EXPECT_EQ(parse_act(to_string(op)), op);
  EXPECT_THROW(parse_nodal("cubic"), ParseError);
}
