#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gopforge/error.hpp"
#include "gopforge/rng.hpp"

using namespace gopforge;

TEST(Rng, SameSeedAndStreamReproduce) {
  RngStream a(5, 9), b(5, 9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(a.position(), 100u);
}

TEST(Rng, DifferentStreamsDiffer) {
  RngStream a(5, 9), b(5, 10), c(6, 9);
  int same_b = 0, same_c = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    same_b += x == b.next_u64();
    same_c += x == c.next_u64();
  }
  EXPECT_EQ(same_b, 0);
  EXPECT_EQ(same_c, 0);
}

TEST(Rng, SplitDoesNotAdvanceParent) {
  RngStream a(1, 2);
  RngStream ref(1, 2);
  RngStream child = a.split(3);
  EXPECT_EQ(a.position(), 0u);
  EXPECT_EQ(a.next_u64(), ref.next_u64());
  RngStream child2 = RngStream(1, 2).split(3);
  EXPECT_EQ(child.next_u64(), child2.next_u64());
  EXPECT_NE(RngStream(1, 2).split(3).next_u64(), RngStream(1, 2).split(4).next_u64());
}

TEST(Rng, UniformStaysInRange) {
  RngStream r(11, 0);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double v = r.uniform(-0.1, 0.1);
    ASSERT_GE(v, -0.1);
    ASSERT_LT(v, 0.1);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LT(lo, -0.099);
  EXPECT_GT(hi, 0.099);
  EXPECT_THROW(r.uniform(1.0, 1.0), ValidationError);
}

TEST(Rng, NormalMoments) {
  RngStream r(3, 4);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sq / n - mean * mean, 1.0, 0.02);
}

TEST(Rng, BelowIsBoundedAndCoversRange) {
  RngStream r(8, 1);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_GT(h, 800);
  EXPECT_THROW(r.below(0), ValidationError);
}

TEST(Rng, ShuffleIsPermutation) {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  RngStream r(2, 2);
  shuffle(std::span<int>(v), r);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(Rng, DeriveStreamIdIsOrderSensitive) {
  EXPECT_NE(derive_stream_id({1, 2, 3}), derive_stream_id({3, 2, 1}));
  EXPECT_EQ(derive_stream_id({1, 2, 3}), derive_stream_id({1, 2, 3}));
  std::set<std::uint64_t> ids;
  for (std::uint64_t a = 0; a < 10; ++a)
    for (std::uint64_t b = 0; b < 10; ++b) ids.insert(derive_stream_id({a, b}));
  EXPECT_EQ(ids.size(), 100u);
}

TEST(Rng, RngUniformBatch) {
  RngStream a(1, 1), b(1, 1);
  const auto v = rng_uniform(a, -2.0, 3.0, 10);
  ASSERT_EQ(v.size(), 10u);
  for (double x : v) EXPECT_EQ(x, b.uniform(-2.0, 3.0));
}
