#pragma once

#include <cstddef>
#include <span>

#include "gopforge/layers.hpp"
#include "gopforge/matrix.hpp"

namespace gopforge {

// kAlways adds the ridge unconditionally; kOnSingular only when the
// unregularized covariance is numerically singular.
enum class RidgeMode { kAlways, kOnSingular };

struct PcaFitSpec {
  double energy_threshold = 0.98;
  double ridge = 0.01;
  RidgeMode ridge_mode = RidgeMode::kAlways;
  bool operator==(const PcaFitSpec&) const = default;
};

struct LdaFitSpec {
  std::size_t num_classes = 2;
  double ridge = 0.01;
  RidgeMode ridge_mode = RidgeMode::kAlways;
  bool operator==(const LdaFitSpec&) const = default;
};

// Centered PCA keeping the fewest leading axes whose share of the (ridged)
// eigenvalue mass reaches energy_threshold. Basis columns are orthonormal.
MemoryProjection fit_pca(const Matrix& x, const PcaFitSpec& spec);

// LDA with num_classes - 1 output dimensions, solved by whitening the
// within-class scatter and diagonalizing the whitened between-class scatter.
MemoryProjection fit_lda(const Matrix& x, std::span<const std::size_t> labels,
                         const LdaFitSpec& spec);

// Sample covariance of centered rows, divided by n - 1.
Matrix covariance(const Matrix& x, std::span<const double> mean);

}  // namespace gopforge
