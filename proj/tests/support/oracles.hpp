#pragma once

// Reference computations used as test oracles. Nothing here calls the
// library's numerical kernels beyond the Matrix container.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "gopforge/matrix.hpp"

namespace oracle {

using gopforge::Matrix;

Matrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols, double lo = -1.0,
                     double hi = 1.0);

// Central difference of a scalar function with respect to one entry of `x`.
double central_difference(const std::function<double()>& f, double& x, double h);

// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor);

// Gaussian elimination with partial pivoting; solves A X = B.
Matrix solve(Matrix a, Matrix b);

// Naive triple loop.
Matrix naive_matmul(const Matrix& a, const Matrix& b);

// Dense sigmoid layer y = sigma(x W + b) and its backward pass.
struct DenseGrads {
  Matrix input_grad;
  Matrix weight_grad;
  std::vector<double> bias_grad;
};
Matrix dense_sigmoid_forward(const Matrix& x, const Matrix& w, std::span<const double> b);
DenseGrads dense_sigmoid_backward(const Matrix& x, const Matrix& w, std::span<const double> b,
                                  const Matrix& upstream);

// Least-squares linear classifier on one-hot targets with a bias column,
// fitted on (x_train, y_train) and scored on (x_test, y_test).
double least_squares_accuracy(const Matrix& x_train, std::span<const std::size_t> y_train,
                              const Matrix& x_test, std::span<const std::size_t> y_test,
                              std::size_t classes);

// Unbiased sample covariance.
Matrix sample_covariance(const Matrix& x);

double median(std::vector<double> v);

}  // namespace oracle
