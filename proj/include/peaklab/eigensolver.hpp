#pragma once

#include <vector>

#include "peaklab/common.hpp"

namespace peaklab {

struct GeneralizedEigen {
    Vector values;                 ///< ascending
    DenseMatrix vectors;           ///< B-orthonormal columns
    std::vector<double> residuals; ///< ||A v - lambda B v|| / ((||A||_1 + |lambda| ||B||_1) ||v||)
    int iterations = 0;
};

/// k smallest eigenpairs of the symmetric pencil A v = lambda B v (B SPD) by
/// shift-invert subspace iteration with B-orthogonal reorthogonalization and
/// Rayleigh-Ritz. `shift` must lie strictly below the spectrum so that
/// A - shift B is positive definite.
GeneralizedEigen smallest_eigenpairs(const SparseMatrix& A, const SparseMatrix& B, int k, double shift,
                                     double tol = 1e-10, int max_iter = 2000);

}  // namespace peaklab
