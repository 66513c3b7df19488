#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gopforge/error.hpp"
#include "gopforge/linalg.hpp"

namespace gopforge {

namespace {

double off_diagonal_sq(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return s;
}

// A <- J^T A J and V <- V J for the rotation annihilating a(p, q).
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

SymEig sym_eig(const Matrix& s, int max_sweeps) {
  if (s.rows() != s.cols()) {
    throw ValidationError("sym_eig: matrix is " + std::to_string(s.rows()) + "x" +
                          std::to_string(s.cols()) + ", expected square");
  }
  check_finite(s, "sym_eig");
  const std::size_t n = s.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(s(i, j) - s(j, i)) > 1e-9) {
        throw ValidationError("sym_eig: matrix not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
      }

  Matrix a = s;
  // Work on the exactly symmetrized copy so rotations stay consistent.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (s(i, j) + s(j, i));
  Matrix v = Matrix::identity(n);

  const double scale = std::max(frobenius_norm(a), 1e-300);
  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    if (std::sqrt(off_diagonal_sq(a)) <= 1e-15 * scale) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        rotate(a, v, p, q);
      }
  }
  if (!converged && std::sqrt(off_diagonal_sq(a)) > 1e-15 * scale) {
    throw NumericError("sym_eig: Jacobi iteration did not converge in " +
                       std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymEig out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values[j] = a(src, src);
    std::size_t biggest = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(biggest, src))) biggest = k;
    const double sign = v(biggest, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = sign * v(k, src);
  }
  return out;
}

}  // namespace gopforge
