#pragma once

#include <vector>

#include "hypercone/matcore.hpp"
#include "hypercone/quadratic_form.hpp"

namespace hypercone::exterior {

using matcore::SquareMatrix;

/// Lexicographically ordered k-element subsets of {0..n-1}, the basis of the
/// k-th exterior power. Subset r of the list indexes basis vector
/// e_{i1} ^ ... ^ e_{ik} with i1 < ... < ik.
struct CompoundIndexing {
  CompoundIndexing(std::size_t n, std::size_t k);

  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::vector<int>> basis;

  std::size_t size() const { return basis.size(); }
  /// Position of a strictly increasing k-subset in the lexicographic list.
  std::size_t index_of(const std::vector<int>& subset) const;
};

/// k-th compound matrix: entry (S, T) is the k x k minor of `a` with rows S
/// and columns T, both in lexicographic order. k = 1 returns a copy and
/// k = n the 1x1 determinant; outside [1, n] throws std::out_of_range.
SquareMatrix compound(const SquareMatrix& a, std::size_t k);

/// Additive k-th compound: the generator M with
/// compound(expm(A, t), k) = expm(M, t). Built by exact Leibniz summation of
/// single-slot actions, never by differencing exponentials.
SquareMatrix additive_compound(const SquareMatrix& a, std::size_t k);

struct Hodge3Result {
  SquareMatrix cofactor;    ///< signed 2x2 cofactors; represents compound(A,2)
  SquareMatrix generator3;  ///< tr(A) I - A^T; represents additive_compound(A,2)
};

/// Dimension-3 representations of the exterior square under the basis
/// (e2^e3, e3^e1, e1^e2). Valid for singular A as well.
Hodge3Result hodge3(const SquareMatrix& a);

/// Change of basis H with H * (lexicographic coords) = (hodge coords), i.e.
/// H * compound(A,2) * H^{-1} = hodge3(A).cofactor. Signed permutation, so
/// H^{-1} = H^T.
const SquareMatrix& hodge3_basis_change();

/// Matrix of the bilinear form (u1^u2, v1^v2) = det [<J u_i, v_j>] on the
/// lexicographic bivector basis. Equal to compound(J, 2) entry for entry
/// (same minor arithmetic). Throws on degenerate J.
SquareMatrix induced_biform(const forms::QuadraticForm& j);

}  // namespace hypercone::exterior
