#pragma once

#include "hypercone/matrix.hpp"
#include "hypercone/tolerances.hpp"

namespace hypercone::matcore {

struct SymEigResult {
  Vec values;            ///< eigenvalues, ascending
  SquareMatrix vectors;  ///< orthonormal eigenvectors as columns, same order
};

struct SvdResult {
  SquareMatrix u;
  Vec sigma;  ///< singular values, descending, nonnegative
  SquareMatrix v;
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Input must be
/// symmetric within tols.symmetry_rel (relative to 1 + max |entry|);
/// otherwise throws std::invalid_argument reporting the asymmetry measure.
SymEigResult sym_eig(const SquareMatrix& s,
                     const Tolerances& tols = default_tolerances());

/// Smallest eigenvalue of a symmetric matrix (Jacobi, values only).
double sym_eig_min(const SquareMatrix& s,
                   const Tolerances& tols = default_tolerances());

/// Singular value decomposition A = U diag(sigma) V^T by one-sided Jacobi
/// (rotations orthogonalize the columns of A, which runs Jacobi on A^T A
/// implicitly). Signs are folded into U so sigma >= 0.
SvdResult svd(const SquareMatrix& a);

/// e^{tA} by scaling and squaring: scale until |tA / 2^s|_1 <= 0.5, apply a
/// degree-13 truncated series, square s times. Throws std::invalid_argument
/// on non-finite input and std::overflow_error if the result leaves the
/// representable range.
SquareMatrix expm(const SquareMatrix& a, double t = 1.0);

/// Determinant via LU with partial pivoting.
double det(const SquareMatrix& a);

/// Determinant of the k-by-k submatrix of `a` with the given rows/columns.
/// Cofactor expansion up to 4x4, LU with full pivoting above.
double minor_det(const SquareMatrix& a, const std::vector<int>& rows,
                 const std::vector<int>& cols);

}  // namespace hypercone::matcore
