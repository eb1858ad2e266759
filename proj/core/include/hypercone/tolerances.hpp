#pragma once

namespace hypercone::matcore {

/// Numerical tolerances used across the library. One record, so every
/// threshold has a single owner and tests can reference the same values.
struct Tolerances {
  double symmetry_rel = 1e-12;     // relative asymmetry accepted by sym_eig
  double eig_residual = 1e-10;     // |SV - V diag(l)| bound, scaled by (1+|S|)
  double orthogonality = 1e-10;    // |Q^T Q - I| bound for eigen/SVD factors
  double expm_rel = 1e-10;         // relative accuracy of expm for |tA| <= 50
  double pencil_endpoint = 1e-9;   // guaranteed accuracy of delta endpoints
  double pencil_bisect = 1e-11;    // internal bisection width (tighter than
                                   // the guarantee so two independent searches
                                   // still agree at pencil_endpoint)
  double form_degeneracy = 1e-12;  // |det J| cutoff relative to scale^n
  double form_eig_floor = 1e-10;   // |eigenvalue| floor relative to |J|
  double liouville_rel = 1e-6;     // det(Phi) vs exp(int tr) on valid orbits
  double liouville_abort = 1e-4;   // integrator aborts above this residual
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tols{};
  return tols;
}

}  // namespace hypercone::matcore
