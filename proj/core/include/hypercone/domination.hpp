#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hypercone/flow.hpp"
#include "hypercone/forms.hpp"

namespace hypercone::domination {

using flow::OrbitSegment;
using flow::VectorFieldModel;
using matcore::SquareMatrix;
using matcore::Vec;

/// Finite-time splitting estimate at a point: E spans the s most contracted
/// right-singular directions of Phi_T, F the orthogonal complement.
struct SplittingEstimate {
  Vec point;
  std::vector<Vec> e_basis;  // orthonormal, s columns
  std::vector<Vec> f_basis;  // orthonormal, c = n - s columns
  double horizon = 0.0;
  double gap_ratio = 1.0;  // sigma_s / sigma_{s+1} boundary ratio (want < 0.5)
  double quality = 0.0;    // principal-angle invariance residual at T/2 (rad)
  bool usable = false;     // gap < 0.5 and quality <= 0.1 rad
};

SplittingEstimate estimate_splitting(const VectorFieldModel& model, const Vec& x, double T,
                                     std::size_t s, double h);

struct RatePolicy {
  double lambda_bar = 1e-2;  // required decay (or growth) rate magnitude
  double r2_min = 0.99;
  double k_bar = 10.0;
};

/// Exponential-rate fit with verdict. `rate` is the least-squares slope of
/// the tracked log quantity; K bounds the deviation from a pure exponential
/// with that slope (prefactor, always >= 1).
struct DominationReport {
  double prefactor = 1.0;
  double rate = 0.0;
  double r2 = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  bool pass = false;
};

/// Fit of log(|Phi_t|E| * |(Phi_t|F)^-1|) against t along the orbit. The
/// restricted operators are accumulated in moving orthonormal frames (QR per
/// step); norms of inverses come from the accumulated inverse factors, so no
/// ill-conditioned full product is ever formed. Pass: rate <= -lambda_bar,
/// r2 >= r2_min, prefactor <= k_bar. A collapsing restriction
/// (QR diagonal < 1e-13) throws std::runtime_error.
DominationReport domination_rate(const VectorFieldModel& model, const OrbitSegment& orbit,
                                 const SplittingEstimate& splitting,
                                 const RatePolicy& policy = RatePolicy{});

/// Fit of log |det(Phi_t|F)| against t for a 2-dimensional F (the area
/// growth along the plane). dim F > 2 requires plane_samples > 0: random
/// 2-planes inside F are fitted and the slowest rate is reported.
/// Pass: rate >= +lambda_bar with the same fit-quality gates.
DominationReport sectional_rate(const VectorFieldModel& model, const OrbitSegment& orbit,
                                const std::vector<Vec>& f_basis,
                                const RatePolicy& policy = RatePolicy{},
                                int plane_samples = 0);

/// Composite-Simpson integral of per-point samples over the orbit time grid
/// (trapezoid fallback on the last panel when the panel count is odd).
double delta_area(const std::vector<double>& times, const std::vector<double>& values);

/// Running integral (cumulative trapezoid) on the same grid.
std::vector<double> delta_running(const std::vector<double>& times,
                                  const std::vector<double>& values);

enum class Trichotomy { FPlusExpanding, FMinusContracting, Hyperbolic, Inconclusive };

std::string to_string(Trichotomy t);

enum class CocycleSide { Base, Wedge };

struct TrichotomyParams {
  double epsilon = 1e-3;  // slope threshold, 1/time
  double window = 5.0;    // window length, time units
};

struct TrichotomyReport {
  Trichotomy verdict = Trichotomy::Inconclusive;
  double min_slope = 0.0;
  double max_slope = 0.0;
  bool all_separated = false;
  bool jprime_positive_everywhere = false;
  double window = 0.0;  // finite-horizon: the window actually used
};

/// Finite-horizon classification of the delta area along orbits.
/// Hyperbolic: J' > 0 at every sampled point (delta = 0 feasible with
/// margin), checked first since it subsumes the slope cases. Otherwise
/// F+ -expanding / F- -contracting when every windowed slope of the running
/// delta integral clears +-epsilon. On the wedge side the integrand is
/// delta2 = 2 tr(D) - delta under the same selection rule.
TrichotomyReport classify_trichotomy(const VectorFieldModel& model,
                                     const std::vector<OrbitSegment>& orbits,
                                     const forms::QuadraticForm& j, forms::DeltaRule rule,
                                     CocycleSide side,
                                     const TrichotomyParams& params = TrichotomyParams{});

struct CrosscheckSample {
  DominationReport base;
  DominationReport wedge;
  bool agree = false;
};

struct CrosscheckReport {
  bool agree = true;  // verdicts match at every sample
  std::vector<CrosscheckSample> samples;
};

/// Verdict agreement between DX_t-domination of E + F and the wedge-cocycle
/// domination of the induced splitting of the k-th exterior power
/// (F~ = wedge^k F, E~ spanned by the remaining wedge-basis products). Both
/// sides run the same policy.
CrosscheckReport exterior_power_crosscheck(const VectorFieldModel& model,
                                     const std::vector<SplittingEstimate>& splittings,
                                     std::size_t k, double T, double h,
                                     const RatePolicy& policy = RatePolicy{});

struct TangencyReport {
  double max_angle = 0.0;      // radians, on the forward-refined bundle
  double max_angle_raw = 0.0;  // radians, against the sample's own F as given
  std::size_t skipped_singular = 0;
  std::size_t checked = 0;
};

/// Max angle between the flow direction and the subbundle F over the sample
/// set; points with |X| <= 1e-8 are skipped and counted. The headline angle
/// is measured on the invariant bundle obtained by pushing each sample's F
/// forward for `refine_time` (plane pushes are numerically benign and
/// converge at the domination rate); the unrefined angle against the given F
/// is reported alongside.
TangencyReport tangency_check(const VectorFieldModel& model,
                              const std::vector<SplittingEstimate>& splittings,
                              double refine_time = 2.5, double h = 1e-3);

struct AdaptedMetricReport {
  double lambda = 0.0;  // largest rate for which all three hold at all sampled t
  double xi = 1.0;      // norm scaling making sup |X| <= 1 over the orbit
  bool pass = false;    // lambda > 0 and the inequalities verified with prefactor 1
  double min_margin = 0.0;
};

/// Adapted-norm verification. Builds the inner product
/// xi^2 (-J on E (+) J on F) from a J-compatible splitting (E negative, F
/// positive; violations throw std::invalid_argument naming the subspace),
/// then checks at sampled t in (0, T]:
///   |Phi_t|E| |(Phi_t|F)^-1| <= e^{-lambda t},  |Phi_t|E| <= e^{-lambda t},
///   |det(Phi_t|F)| >= e^{lambda t},
/// with prefactor exactly 1, reporting the best lambda.
AdaptedMetricReport adapted_metric_check(const VectorFieldModel& model, const Vec& x0,
                                         const SplittingEstimate& splitting,
                                         const forms::QuadraticForm& j, double T, double h,
                                         std::size_t t_samples = 50);

}  // namespace hypercone::domination
