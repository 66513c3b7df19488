#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gopforge/error.hpp"
#include "gopforge/linalg.hpp"
#include "oracles.hpp"

using namespace gopforge;

namespace {

Matrix random_symmetric(std::mt19937_64& gen, std::size_t n) {
  const Matrix a = oracle::random_matrix(gen, n, n);
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s(i, j) = a(i, j) + a(j, i);
  return s;
}

}  // namespace

TEST(SymEig, TwoByTwoClosedForm) {
  // [[2,1],[1,2]] has eigenvalues 3 and 1 with vectors (1,1)/sqrt2, (1,-1)/sqrt2.
  const SymEig e = sym_eig(Matrix::from_rows({{2, 1}, {1, 2}}));
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(e.vectors(0, 0) * e.vectors(1, 0), 0.5, 1e-14);
  EXPECT_NEAR(e.vectors(0, 1) * e.vectors(1, 1), -0.5, 1e-14);
}

TEST(SymEig, DiagonalInputSortsDescending) {
  const SymEig e = sym_eig(Matrix::from_rows({{1, 0, 0}, {0, 5, 0}, {0, 0, -2}}));
  EXPECT_EQ(e.values, (std::vector<double>{5, 1, -2}));
  EXPECT_EQ(e.vectors(1, 0), 1.0);
  EXPECT_EQ(e.vectors(0, 1), 1.0);
  EXPECT_EQ(e.vectors(2, 2), 1.0);
}

TEST(SymEig, RandomMatricesDecompose) {
  std::mt19937_64 gen(42);
  for (std::size_t n : {1u, 2u, 3u, 7u, 20u, 45u}) {
    const Matrix s = random_symmetric(gen, n);
    const SymEig e = sym_eig(s);
    ASSERT_EQ(e.values.size(), n);
    const double scale = frobenius_norm(s);
    for (std::size_t j = 0; j + 1 < n; ++j) EXPECT_GE(e.values[j], e.values[j + 1]);
    // A v = lambda v, V^T V = I.
    const Matrix av = oracle::naive_matmul(s, e.vectors);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i)
        EXPECT_NEAR(av(i, j), e.values[j] * e.vectors(i, j), 1e-12 * scale);
    Matrix vt(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) vt(i, j) = e.vectors(j, i);
    const Matrix vtv = oracle::naive_matmul(vt, e.vectors);
    EXPECT_LT(max_abs_diff(vtv, Matrix::identity(n)), 1e-12);
    // Trace is preserved.
    double trace = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += s(i, i);
    for (double v : e.values) sum += v;
    EXPECT_NEAR(trace, sum, 1e-12 * scale);
  }
}

TEST(SymEig, SignNormalization) {
  std::mt19937_64 gen(7);
  const SymEig e = sym_eig(random_symmetric(gen, 9));
  for (std::size_t j = 0; j < 9; ++j) {
    std::size_t big = 0;
    for (std::size_t i = 1; i < 9; ++i)
      if (std::abs(e.vectors(i, j)) > std::abs(e.vectors(big, j))) big = i;
    EXPECT_GT(e.vectors(big, j), 0.0);
  }
}

TEST(SymEig, Deterministic) {
  std::mt19937_64 gen(3);
  const Matrix s = random_symmetric(gen, 12);
  const SymEig a = sym_eig(s);
  const SymEig b = sym_eig(s);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.vectors, b.vectors);
}

TEST(SymEig, RejectsInvalidInput) {
  EXPECT_THROW(sym_eig(Matrix(2, 3)), ValidationError);
  EXPECT_THROW(sym_eig(Matrix::from_rows({{1, 2}, {0, 1}})), ValidationError);
}
