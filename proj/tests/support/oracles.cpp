#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

Matrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = dist(gen);
  return m;
}

double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

Matrix solve(Matrix a, Matrix b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw std::invalid_argument("solve: shape");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (a(piv, col) == 0.0) throw std::runtime_error("solve: singular");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
      for (std::size_t c = 0; c < b.cols(); ++c) std::swap(b(piv, c), b(col, c));
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      for (std::size_t c = 0; c < b.cols(); ++c) b(r, c) -= f * b(col, c);
    }
  }
  Matrix x(n, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = n; i-- > 0;) {
      double s = b(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= a(i, k) * x(k, c);
      x(i, c) = s / a(i, i);
    }
  }
  return x;
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Matrix dense_sigmoid_forward(const Matrix& x, const Matrix& w, std::span<const double> b) {
  Matrix y(x.rows(), w.cols());
  for (std::size_t s = 0; s < x.rows(); ++s)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double a = 0.0;
      for (std::size_t i = 0; i < x.cols(); ++i) a += x(s, i) * w(i, j);
      y(s, j) = sigmoid(a + b[j]);
    }
  return y;
}

DenseGrads dense_sigmoid_backward(const Matrix& x, const Matrix& w, std::span<const double> b,
                                  const Matrix& upstream) {
  const Matrix y = dense_sigmoid_forward(x, w, b);
  DenseGrads g{Matrix(x.rows(), x.cols()), Matrix(w.rows(), w.cols()), std::vector<double>(w.cols(), 0.0)};
  for (std::size_t s = 0; s < x.rows(); ++s)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const double delta = upstream(s, j) * y(s, j) * (1.0 - y(s, j));
      g.bias_grad[j] += delta;
      for (std::size_t i = 0; i < x.cols(); ++i) {
        g.weight_grad(i, j) += delta * x(s, i);
        g.input_grad(s, i) += delta * w(i, j);
      }
    }
  return g;
}

double least_squares_accuracy(const Matrix& x_train, std::span<const std::size_t> y_train,
                              const Matrix& x_test, std::span<const std::size_t> y_test,
                              std::size_t classes) {
  const std::size_t d = x_train.cols() + 1;
  Matrix ata(d, d);
  Matrix aty(d, classes);
  std::vector<double> row(d);
  for (std::size_t s = 0; s < x_train.rows(); ++s) {
    for (std::size_t i = 0; i + 1 < d; ++i) row[i] = x_train(s, i);
    row[d - 1] = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) ata(i, j) += row[i] * row[j];
      aty(i, y_train[s]) += row[i];
    }
  }
  for (std::size_t i = 0; i < d; ++i) ata(i, i) += 1e-9;
  const Matrix coef = solve(ata, aty);
  std::size_t correct = 0;
  for (std::size_t s = 0; s < x_test.rows(); ++s) {
    std::size_t best = 0;
    double best_score = -1e300;
    for (std::size_t c = 0; c < classes; ++c) {
      double score = coef(d - 1, c);
      for (std::size_t i = 0; i + 1 < d; ++i) score += x_test(s, i) * coef(i, c);
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    correct += best == y_test[s];
  }
  return static_cast<double>(correct) / static_cast<double>(x_test.rows());
}

Matrix sample_covariance(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < d; ++i) mean[i] += x(s, i) / static_cast<double>(n);
  Matrix c(d, d);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c(i, j) += (x(s, i) - mean[i]) * (x(s, j) - mean[j]);
  for (auto& v : c.data()) v /= static_cast<double>(n - 1);
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle
