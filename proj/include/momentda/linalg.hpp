#pragma once

#include "momentda/common.hpp"

namespace momentda {

struct SymmetricEigen {
    Vector values;   // ascending
    Matrix vectors;  // columns are orthonormal eigenvectors
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
/// tol times the Frobenius norm of the input. Deterministic for a given input.
SymmetricEigen jacobi_eigen(const Matrix& a, double tol = 1e-12, int max_sweeps = 100);

/// Sample covariance with divisor n - 1 (rows are observations).
Matrix sample_covariance(const Matrix& x);

Matrix center_columns(const Matrix& x);

}  // namespace momentda
