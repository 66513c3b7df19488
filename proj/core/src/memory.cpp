#include "gopforge/memory.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gopforge/error.hpp"
#include "gopforge/linalg.hpp"

namespace gopforge {

namespace {

constexpr double kSingularRatio = 1e-12;

bool near_singular(const SymEig& e) {
  const double top = e.values.empty() ? 0.0 : std::max(e.values.front(), 0.0);
  return e.values.empty() || e.values.back() <= kSingularRatio * std::max(top, 1e-300);
}

void add_ridge(Matrix& m, double ridge) {
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += ridge;
}

// Eigendecomposition of `m`, adding `ridge` to the diagonal per `mode`.
SymEig ridged_eig(Matrix m, double ridge, RidgeMode mode, bool& applied) {
  applied = false;
  if (mode == RidgeMode::kAlways) {
    add_ridge(m, ridge);
    applied = ridge != 0.0;
    return sym_eig(m);
  }
  SymEig e = sym_eig(m);
  if (!near_singular(e) || ridge == 0.0) return e;
  add_ridge(m, ridge);
  applied = true;
  return sym_eig(m);
}

}  // namespace

Matrix covariance(const Matrix& x, std::span<const double> mean) {
  const std::size_t d = x.cols();
  Matrix c(d, d);
  std::vector<double> centered(d);
  for (std::size_t s = 0; s < x.rows(); ++s) {
    auto r = x.row(s);
    for (std::size_t k = 0; k < d; ++k) centered[k] = r[k] - mean[k];
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = centered[i];
      if (ci == 0.0) continue;
      double* row = c.row(i).data();
      for (std::size_t j = i; j < d; ++j) row[j] += ci * centered[j];
    }
  }
  const double denom = static_cast<double>(x.rows() > 1 ? x.rows() - 1 : 1);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      c(i, j) /= denom;
      c(j, i) = c(i, j);
    }
  return c;
}

MemoryProjection fit_pca(const Matrix& x, const PcaFitSpec& spec) {
  if (x.rows() < 2)
    throw ValidationError("fit_pca: need at least 2 samples, got " + std::to_string(x.rows()));
  if (x.cols() == 0) throw ValidationError("fit_pca: input has no features");
  if (!(spec.energy_threshold > 0.0 && spec.energy_threshold <= 1.0))
    throw ValidationError("fit_pca: energy_threshold must be in (0, 1]");
  if (!(spec.ridge >= 0.0)) throw ValidationError("fit_pca: ridge must be >= 0");
  check_finite(x, "fit_pca input");

  MemoryProjection p;
  p.kind = MemoryKind::kPca;
  p.mean = column_means(x);
  p.energy_threshold = spec.energy_threshold;
  p.ridge = spec.ridge;
  const SymEig e = ridged_eig(covariance(x, p.mean), spec.ridge, spec.ridge_mode, p.ridge_applied);

  const std::size_t d = x.cols();
  std::vector<double> spectrum(d);
  for (std::size_t i = 0; i < d; ++i) spectrum[i] = std::max(e.values[i], 0.0);
  double total = 0.0;
  for (double v : spectrum) total += v;

  std::size_t keep = d;
  if (total > 0.0) {
    double cumulative = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      cumulative += spectrum[i];
      if (cumulative / total >= spec.energy_threshold) {
        keep = i + 1;
        break;
      }
    }
  } else {
    keep = 1;
  }

  p.basis = Matrix(d, keep);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < keep; ++c) p.basis(r, c) = e.vectors(r, c);
  p.eigenvalues.assign(e.values.begin(), e.values.begin() + static_cast<std::ptrdiff_t>(keep));
  return p;
}

MemoryProjection fit_lda(const Matrix& x, std::span<const std::size_t> labels,
                         const LdaFitSpec& spec) {
  const std::size_t c = spec.num_classes;
  const std::size_t d = x.cols();
  if (c < 2) throw ValidationError("fit_lda: need at least 2 classes");
  if (labels.size() != x.rows())
    throw ValidationError("fit_lda: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(x.rows()) + " samples");
  if (c - 1 > d)
    throw ValidationError("fit_lda: C-1 = " + std::to_string(c - 1) +
                          " exceeds feature dimension " + std::to_string(d));
  if (!(spec.ridge >= 0.0)) throw ValidationError("fit_lda: ridge must be >= 0");
  check_finite(x, "fit_lda input");

  std::vector<std::size_t> counts(c, 0);
  for (std::size_t l : labels) {
    if (l >= c) throw ValidationError("fit_lda: label " + std::to_string(l) + " out of range");
    ++counts[l];
  }
  std::string empty;
  for (std::size_t k = 0; k < c; ++k)
    if (counts[k] == 0) empty += (empty.empty() ? "" : ", ") + std::to_string(k);
  if (!empty.empty()) throw ValidationError("fit_lda: no samples for class(es) " + empty);

  const std::vector<double> mean = column_means(x);
  Matrix class_means(c, d);
  for (std::size_t s = 0; s < x.rows(); ++s) {
    auto r = x.row(s);
    for (std::size_t k = 0; k < d; ++k) class_means(labels[s], k) += r[k];
  }
  for (std::size_t cl = 0; cl < c; ++cl)
    for (std::size_t k = 0; k < d; ++k) class_means(cl, k) /= static_cast<double>(counts[cl]);

  // Scatter matrices normalized by n so the ridge acts on covariance scale.
  const double n = static_cast<double>(x.rows());
  Matrix within(d, d);
  std::vector<double> diff(d);
  for (std::size_t s = 0; s < x.rows(); ++s) {
    auto r = x.row(s);
    for (std::size_t k = 0; k < d; ++k) diff[k] = r[k] - class_means(labels[s], k);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) within(i, j) += diff[i] * diff[j];
  }
  Matrix between(d, d);
  for (std::size_t cl = 0; cl < c; ++cl) {
    for (std::size_t k = 0; k < d; ++k) diff[k] = class_means(cl, k) - mean[k];
    const double w = static_cast<double>(counts[cl]);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) between(i, j) += w * diff[i] * diff[j];
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      within(i, j) /= n;
      within(j, i) = within(i, j);
      between(i, j) /= n;
      between(j, i) = between(i, j);
    }

  MemoryProjection p;
  p.kind = MemoryKind::kLda;
  p.mean = mean;
  p.ridge = spec.ridge;
  const SymEig we = ridged_eig(within, spec.ridge, spec.ridge_mode, p.ridge_applied);
  if (we.values.back() <= 0.0)
    throw NumericError("fit_lda: within-class scatter is singular; use a positive ridge");

  // Whitening transform W = U diag(1/sqrt(lambda)).
  Matrix whiten(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t k = 0; k < d; ++k) whiten(r, k) = we.vectors(r, k) / std::sqrt(we.values[k]);
  Matrix wb = matmul(matmul(transpose(whiten), between), whiten);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) wb(i, j) = wb(j, i) = 0.5 * (wb(i, j) + wb(j, i));
  const SymEig be = sym_eig(wb);

  const std::size_t keep = c - 1;
  Matrix top(d, keep);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t k = 0; k < keep; ++k) top(r, k) = be.vectors(r, k);
  p.basis = matmul(whiten, top);
  p.eigenvalues.assign(be.values.begin(), be.values.begin() + static_cast<std::ptrdiff_t>(keep));
  return p;
}

}  // namespace gopforge
