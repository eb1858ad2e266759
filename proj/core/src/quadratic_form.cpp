#include "hypercone/quadratic_form.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hypercone::forms {

QuadraticForm::QuadraticForm(SquareMatrix j, const matcore::Tolerances& tols)
    : j_(std::move(j)) {
  const auto eig = matcore::sym_eig(j_, tols);
  const std::size_t n = j_.dim();
  double scale = 0.0;
  for (double v : eig.values) scale = std::max(scale, std::abs(v));
  std::size_t negatives = 0;
  for (double v : eig.values) {
    if (std::abs(v) <= tols.form_eig_floor * scale) {
      std::ostringstream msg;
      msg << "QuadraticForm: degenerate form, eigenvalue " << v
          << " below floor " << tols.form_eig_floor * scale;
      throw std::invalid_argument(msg.str());
    }
    if (v < 0.0) ++negatives;
  }
  if (negatives == 0 || negatives == n) {
    throw std::invalid_argument("QuadraticForm: form must be indefinite (0 < index < n)");
  }
  index_ = negatives;
}

double QuadraticForm::value(const Vec& v) const {
  return matcore::dot(j_.apply(v), v);
}

QuadraticForm QuadraticForm::negated() const {
  return QuadraticForm(j_ * -1.0);
}

}  // namespace hypercone::forms
