#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hypercone/forms.hpp"
#include "hypercone/kvconfig.hpp"
#include "hypercone/matcore.hpp"

namespace hypercone::flow {

using matcore::SquareMatrix;
using matcore::Vec;

struct Box {
  Vec lo;
  Vec hi;
  bool contains(const Vec& x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  Box inflated(double factor) const;
};

/// A vector field given by evaluators for X and its spatial derivative DX,
/// with region metadata and a default quadratic form. Immutable after
/// construction; integrate() is a pure function of (model, x0, T, h).
struct VectorFieldModel {
  std::string name;
  std::size_t dim = 3;
  std::function<Vec(const Vec&)> velocity;
  std::function<SquareMatrix(const Vec&)> jacobian;
  Box region;
  std::optional<forms::QuadraticForm> form;
  /// Region kind at a point ("linear", "lobe1", "transition2", ...); empty
  /// function for models without region structure.
  std::function<std::string(const Vec&)> region_label;
};

/// Time grid, states, fundamental matrices Phi_t (variational flow) and
/// optionally the wedge cocycle, all sampled on the same grid.
struct OrbitSegment {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<SquareMatrix> fundamentals;
  std::vector<SquareMatrix> wedge_fundamentals;  // empty unless requested
  /// log det Phi_t accumulated from the per-step maps; stays accurate where
  /// det of the assembled product would have drowned in roundoff. Satisfies
  /// log_det = int_0^t tr DX within the Liouville tolerance.
  std::vector<double> log_det;
  double step = 0.0;
  bool truncated = false;     // left the model region before reaching T
  std::size_t exit_index = 0; // last valid index when truncated

  std::size_t size() const { return times.size(); }
  double duration() const { return times.empty() ? 0.0 : times.back(); }
};

/// x' = D x with D = diag(l1, l2, l3). Enforces l2 < l3 < 0 < l1 unless
/// `relaxed`; default form is diag(1, -1, 1).
VectorFieldModel model_linear_saddle(double l1, double l2, double l3, bool relaxed = false);

/// Classic Lorenz field (sigma, r, b), exact Jacobian, positive parameters.
VectorFieldModel model_classic_lorenz(double sigma, double r, double b);

enum class JacobianMode { MatrixFamily, FullJacobian };

struct GeometricLorenzParams {
  double l1 = 11.8277, l2 = -22.8277, l3 = -2.6667;
  double rho = 0.05;   // lobe dilation factor on the xz rotation block
  double zeta = 0.05;  // lobe dilation factor on the y direction
  double linear_half_width = 1.0;  // |x| below this: linear region
  double lobe_start = 2.0;         // |x| above this: lobe region
  Vec center1{3.0, 0.0, 0.0};
  Vec center2{-3.0, 0.0, 0.0};
  JacobianMode mode = JacobianMode::MatrixFamily;
};

/// Piecewise geometric Lorenz field: linear saddle around the origin, rotated
/// lobes, and blended transition bands. In MatrixFamily mode the Jacobian in
/// a transition is exactly mu D + (1 - mu) A_i; FullJacobian adds the
/// blend-gradient term and matches finite differences everywhere.
class GeometricLorenzModel {
 public:
  explicit GeometricLorenzModel(GeometricLorenzParams params);

  const GeometricLorenzParams& params() const { return p_; }
  SquareMatrix linear_matrix() const;
  SquareMatrix lobe_matrix(int lobe) const;  // lobe in {1, 2}
  Vec lobe_translation(int lobe) const;      // continuity along the x-axis

  double mu_at(const Vec& x) const;          // 1 in linear region, 0 in lobes
  /// x-coordinate (on the given side, +1 or -1) whose blend weight is mu.
  double x_for_mu(double mu, int side) const;
  std::string region_label(const Vec& x) const;

  Vec velocity(const Vec& x) const;
  SquareMatrix jacobian(const Vec& x) const;

  VectorFieldModel model() const;

 private:
  GeometricLorenzParams p_;
};

/// Builds one of the named models from key-value configuration (keys:
/// model, spectrum, relaxed, rho, zeta, linear_half_width, lobe_start, mode,
/// sigma, r, b).
VectorFieldModel model_from_config(const kv::Config& cfg);

/// Fixed-step fourth-order Runge-Kutta on the augmented system x' = X(x),
/// Phi' = DX(x) Phi and optionally W' = D2(x) W with D2 the wedge generator.
/// The step count is round(T/h) with the step adjusted to land exactly on T.
/// Leaves the region -> truncation (flagged, not an error); a Liouville
/// residual above tols.liouville_abort -> std::runtime_error (step too
/// large).
OrbitSegment integrate(const VectorFieldModel& model, const Vec& x0, double T, double h,
                       bool with_wedge = false,
                       const matcore::Tolerances& tols = matcore::default_tolerances());

/// One-step fundamental matrix over [0, h] starting at state x; the same
/// stage arithmetic integrate() uses, so stepping these reproduces the
/// stored fundamentals.
SquareMatrix step_transition(const VectorFieldModel& model, const Vec& x, double h);

/// CSV export, header t,x1..xn,phi11..phinn[,w11..]; '.' decimal point
/// regardless of locale.
void orbit_to_csv(const OrbitSegment& orbit, std::ostream& out);

/// Max over points of |(X(x+he) - X(x-he)) / 2h - DX(x) e| over coordinate
/// directions e, h = 1e-5. Consistency check for model Jacobians.
double jacobian_residual(const VectorFieldModel& model, const std::vector<Vec>& points);

}  // namespace hypercone::flow
