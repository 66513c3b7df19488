#pragma once

#include <vector>

#include "gopforge/matrix.hpp"

namespace gopforge {

struct SymEig {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
//
// Symmetry is checked to 1e-9 absolute on each mirrored pair. Eigenvectors
// are orthonormal and sign-normalized so that the largest-magnitude component
// of each is positive. Throws NumericError if the off-diagonal mass does not
// vanish within the sweep budget.
SymEig sym_eig(const Matrix& s, int max_sweeps = 100);

}  // namespace gopforge
