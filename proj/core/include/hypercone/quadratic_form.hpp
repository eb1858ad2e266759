#pragma once

#include "hypercone/matcore.hpp"

namespace hypercone::forms {

using matcore::SquareMatrix;
using matcore::Vec;

/// Indefinite nondegenerate symmetric form x -> <Jx, x>, with its index
/// (dimension of a maximal negative subspace) recorded at construction.
/// Validation rejects degenerate J and indices 0 or n.
class QuadraticForm {
 public:
  /// Validates symmetry, nondegeneracy (|eigenvalue| > form_eig_floor * |J|)
  /// and that the negative eigenvalue count is strictly between 0 and n.
  explicit QuadraticForm(SquareMatrix j,
                         const matcore::Tolerances& tols = matcore::default_tolerances());

  const SquareMatrix& matrix() const { return j_; }
  std::size_t dim() const { return j_.dim(); }
  std::size_t index() const { return index_; }

  /// <Jv, v>
  double value(const Vec& v) const;

  QuadraticForm negated() const;

 private:
  SquareMatrix j_;
  std::size_t index_ = 0;
};

}  // namespace hypercone::forms
