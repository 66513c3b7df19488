#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace gopforge {

// Dense row-major matrix of doubles. Value type; copies are deep.
//
// Constructors that take external data reject non-finite entries. Mutable
// element access cannot be policed, so code that writes through operator()
// calls check_finite() where finiteness matters.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, double fill);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  // Exact elementwise equality (bitwise for finite doubles other than +-0).
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

bool all_finite(std::span<const double> values) noexcept;

// Throws NumericError mentioning `what` if any entry is NaN or infinite.
void check_finite(const Matrix& m, std::string_view what);
void check_finite(std::span<const double> values, std::string_view what);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& m, double factor);
double frobenius_norm(const Matrix& m) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);

std::vector<double> column_means(const Matrix& m);
Matrix select_rows(const Matrix& m, std::span<const std::size_t> indices);

}  // namespace gopforge
