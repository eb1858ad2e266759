#pragma once

#include <optional>
#include <string>

#include "hypercone/matcore.hpp"
#include "hypercone/quadratic_form.hpp"

namespace hypercone::forms {

using matcore::SquareMatrix;
using matcore::Vec;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return lo < x && x < hi; }
};

/// J' operator: J D + D^T J. Adjoints are plain transposes, so inputs must be
/// expressed in orthonormal ambient coordinates; callers with a non-Euclidean
/// metric pre-conjugate. Symmetric by construction.
SquareMatrix jprime(const QuadraticForm& j, const SquareMatrix& d);

/// Smallest eigenvalue of J' - delta J; the strict-separation margin.
struct Witness {
  bool ok = false;
  double margin = 0.0;  // lambda_min(J' - delta J), signed
};
Witness separation_witness(const QuadraticForm& j, const SquareMatrix& d, double delta);

/// The open set { delta : J' - delta J > 0 }. lambda_min of the pencil is
/// concave in delta, so the set is an interval; endpoints are located by a
/// coarse scan, golden-section on the maximum, then bisection. Empty feasible
/// set returns nullopt (a valid answer, not an error).
std::optional<Interval> delta_interval(const QuadraticForm& j, const SquareMatrix& d,
                                       const matcore::Tolerances& tols = matcore::default_tolerances());

/// Infinitesimal generator of the exterior square: tr(D) I - D^T for n = 3
/// (the Hodge 3x3 representation), the lexicographic additive compound
/// otherwise.
SquareMatrix wedge_generator(const SquareMatrix& d);

struct WedgeSeparation {
  std::optional<Interval> delta2;  ///< { d2 : (J' - 2 tr(D) J) - d2 (-J) > 0 }
  bool criterion2 = false;         ///< J' - 2 tr(D) J > 0 (d2 = 0 feasible with margin)
};

/// Exterior-square separation data for n = 3, index-1 forms. The delta2
/// interval is computed from its own pencil and cross-checked against the
/// exact endpoint map d2 = 2 tr(D) - d; a disagreement beyond the endpoint
/// tolerance throws std::logic_error. Outside the (n = 3, index 1)
/// hypothesis this throws std::invalid_argument rather than generalizing.
WedgeSeparation wedge_separation(const QuadraticForm& j, const SquareMatrix& d,
                                 const matcore::Tolerances& tols = matcore::default_tolerances());

struct CertificateVerdicts {
  bool strictly_separated = false;
  bool wedge_separated = false;
  bool delta_negative_feasible = false;
  bool delta2_positive_feasible = false;
};

/// Per-point separation data: the full feasible intervals plus derived
/// verdict flags. delta2 endpoints always satisfy d2 = trace2 - d applied
/// order-reversingly to the delta interval.
struct SeparationCertificate {
  Vec point;
  std::optional<Interval> delta;
  double trace2 = 0.0;  ///< 2 tr(D) at the point
  std::optional<Interval> delta2;
  bool criterion2 = false;
  CertificateVerdicts verdicts;
};

/// Builds the certificate at one point from DX alone. `with_wedge` requires
/// the (n = 3, index 1) hypothesis.
SeparationCertificate certify_point(const QuadraticForm& j, const SquareMatrix& d,
                                    const Vec& point, bool with_wedge,
                                    const matcore::Tolerances& tols = matcore::default_tolerances());

enum class DeltaRule { Midpoint, MaxMargin, NearLo };

DeltaRule delta_rule_from_string(const std::string& name);
std::string to_string(DeltaRule rule);

/// Selects one delta from a feasible interval. Midpoint: center. MaxMargin:
/// argmax of lambda_min(J' - delta J). NearLo: lo + 1e-3 * width, which
/// maximizes the induced delta2.
std::optional<double> select_delta(const QuadraticForm& j, const SquareMatrix& d,
                                   const std::optional<Interval>& interval, DeltaRule rule);

/// Cone-quotient bounds sup_{J(w)<0} J'(w)/J(w) and inf_{J(v)>0} J'(v)/J(v),
/// estimated by sampling. Diagnostic companion to the interval endpoints;
/// recorded, never asserted.
struct ConeQuotientBounds {
  double sup_negative = 0.0;
  double inf_positive = 0.0;
};
ConeQuotientBounds cone_quotient_bounds(const QuadraticForm& j, const SquareMatrix& d,
                                        int samples = 20000, unsigned seed = 12345);

}  // namespace hypercone::forms
