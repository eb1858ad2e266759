#include "hypercone/flow.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "hypercone/exterior.hpp"

namespace hypercone::flow {

Box Box::inflated(double factor) const {
  Box out = *this;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const double half = 0.5 * (hi[i] - lo[i]) * factor;
    out.lo[i] -= half;
    out.hi[i] += half;
  }
  return out;
}

namespace {

forms::QuadraticForm lorenz_like_form() {
  return forms::QuadraticForm(SquareMatrix::diagonal({1.0, -1.0, 1.0}));
}

double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }
double smoothstep_deriv(double u) { return 6.0 * u * (1.0 - u); }

}  // namespace

VectorFieldModel model_linear_saddle(double l1, double l2, double l3, bool relaxed) {
  if (!relaxed && !(l2 < l3 && l3 < 0.0 && 0.0 < l1)) {
    throw std::invalid_argument(
        "model_linear_saddle: spectrum must satisfy l2 < l3 < 0 < l1 (or pass relaxed)");
  }
  const SquareMatrix d = SquareMatrix::diagonal({l1, l2, l3});
  VectorFieldModel m;
  m.name = "linear_saddle";
  m.dim = 3;
  m.velocity = [d](const Vec& x) { return d.apply(x); };
  m.jacobian = [d](const Vec&) { return d; };
  m.region = Box{{-10.0, -10.0, -10.0}, {10.0, 10.0, 10.0}};
  m.form = lorenz_like_form();
  return m;
}

VectorFieldModel model_classic_lorenz(double sigma, double r, double b) {
  if (!(sigma > 0.0 && r > 0.0 && b > 0.0)) {
    throw std::invalid_argument("model_classic_lorenz: parameters must be positive");
  }
  VectorFieldModel m;
  m.name = "classic_lorenz";
  m.dim = 3;
  m.velocity = [=](const Vec& x) {
    return Vec{sigma * (x[1] - x[0]), r * x[0] - x[1] - x[0] * x[2],
               x[0] * x[1] - b * x[2]};
  };
  m.jacobian = [=](const Vec& x) {
    return SquareMatrix(3, {-sigma, sigma, 0.0,      //
                            r - x[2], -1.0, -x[0],   //
                            x[1], x[0], -b});
  };
  m.region = Box{{-25.0, -35.0, -5.0}, {25.0, 35.0, 60.0}};

  // Default form: diag(1, -1, 1) expressed in the eigenbasis of DX at the
  // origin, J = S^-T J0 S^-1. By congruence the origin pencil then matches
  // the diagonalized saddle exactly; the raw coordinate form would be
  // infeasible there because of the large off-diagonal r - sigma coupling.
  const double disc = std::sqrt((sigma + 1.0) * (sigma + 1.0) + 4.0 * sigma * (r - 1.0));
  const double mu1 = 0.5 * (-(sigma + 1.0) + disc);
  const double mu2 = 0.5 * (-(sigma + 1.0) - disc);
  SquareMatrix s(3);
  for (int col = 0; col < 2; ++col) {
    const double mu = (col == 0) ? mu1 : mu2;
    const double len = std::sqrt(1.0 + (mu + sigma) * (mu + sigma) / (sigma * sigma));
    s(0, col) = 1.0 / len;
    s(1, col) = (mu + sigma) / sigma / len;
  }
  s(2, 2) = 1.0;
  const SquareMatrix s_inv =
      exterior::hodge3(s).cofactor.transpose() * (1.0 / matcore::det(s));
  SquareMatrix j = s_inv.transpose() * SquareMatrix::diagonal({1.0, -1.0, 1.0}) * s_inv;
  j = (j + j.transpose()) * 0.5;
  m.form = forms::QuadraticForm(j);
  return m;
}

GeometricLorenzModel::GeometricLorenzModel(GeometricLorenzParams params) : p_(std::move(params)) {
  if (!(p_.rho > 0.0 && p_.rho < 1.0 && p_.zeta > 0.0 && p_.zeta < 1.0)) {
    throw std::invalid_argument("GeometricLorenzModel: need 0 < rho, zeta < 1");
  }
  if (!(p_.l2 < p_.l3 && p_.l3 < 0.0 && 0.0 < p_.l1)) {
    throw std::invalid_argument("GeometricLorenzModel: spectrum must satisfy l2 < l3 < 0 < l1");
  }
  if (!(0.0 < p_.linear_half_width && p_.linear_half_width < p_.lobe_start)) {
    throw std::invalid_argument("GeometricLorenzModel: need 0 < linear_half_width < lobe_start");
  }
}

SquareMatrix GeometricLorenzModel::linear_matrix() const {
  return SquareMatrix::diagonal({p_.l1, p_.l2, p_.l3});
}

SquareMatrix GeometricLorenzModel::lobe_matrix(int lobe) const {
  if (lobe != 1 && lobe != 2) throw std::invalid_argument("lobe_matrix: lobe must be 1 or 2");
  const double rot = (lobe == 1) ? 1.0 : -1.0;  // -(-1)^i
  return SquareMatrix(3, {p_.rho * p_.l1, 0.0, rot,   //
                          0.0, p_.zeta * p_.l2, 0.0,  //
                          -rot, 0.0, p_.rho * p_.l1});
}

Vec GeometricLorenzModel::lobe_translation(int lobe) const {
  // Chosen so the lobe field meets the linear field at (+-lobe_start, 0, 0).
  const double side = (lobe == 1) ? 1.0 : -1.0;
  const Vec q{side * p_.lobe_start, 0.0, 0.0};
  const Vec& c = (lobe == 1) ? p_.center1 : p_.center2;
  const Vec at_interface = linear_matrix().apply(q);
  const Vec lobe_part = lobe_matrix(lobe).apply(matcore::sub(q, c));
  return matcore::sub(at_interface, lobe_part);
}

double GeometricLorenzModel::mu_at(const Vec& x) const {
  const double ax = std::abs(x[0]);
  if (ax <= p_.linear_half_width) return 1.0;
  if (ax >= p_.lobe_start) return 0.0;
  const double u = (ax - p_.linear_half_width) / (p_.lobe_start - p_.linear_half_width);
  return 1.0 - smoothstep(u);
}

double GeometricLorenzModel::x_for_mu(double mu, int side) const {
  if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("x_for_mu: mu outside [0, 1]");
  const double target = 1.0 - mu;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (smoothstep(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  const double u = 0.5 * (lo + hi);
  const double ax = p_.linear_half_width + u * (p_.lobe_start - p_.linear_half_width);
  return (side >= 0 ? 1.0 : -1.0) * ax;
}

std::string GeometricLorenzModel::region_label(const Vec& x) const {
  const double ax = std::abs(x[0]);
  const char* side = (x[0] >= 0.0) ? "1" : "2";
  if (ax <= p_.linear_half_width) return "linear";
  if (ax >= p_.lobe_start) return std::string("lobe") + side;
  return std::string("transition") + side;
}

namespace {

// The declared region plus a margin for integrator stage points; beyond it
// the piecewise construction is meaningless.
void check_declared_region(const GeometricLorenzParams& p, const Vec& x) {
  const double bound = 1.1 * (p.lobe_start + 6.0);
  for (double c : x) {
    if (std::abs(c) > bound) {
      throw std::domain_error("geometric_lorenz: point outside declared region");
    }
  }
}

}  // namespace

Vec GeometricLorenzModel::velocity(const Vec& x) const {
  check_declared_region(p_, x);
  const double mu = mu_at(x);
  const Vec lin = linear_matrix().apply(x);
  if (mu >= 1.0) return lin;
  const int lobe = (x[0] >= 0.0) ? 1 : 2;
  const Vec& c = (lobe == 1) ? p_.center1 : p_.center2;
  Vec lob = matcore::add(lobe_matrix(lobe).apply(matcore::sub(x, c)), lobe_translation(lobe));
  if (mu <= 0.0) return lob;
  Vec out(3);
  for (int i = 0; i < 3; ++i) out[i] = mu * lin[i] + (1.0 - mu) * lob[i];
  return out;
}

SquareMatrix GeometricLorenzModel::jacobian(const Vec& x) const {
  check_declared_region(p_, x);
  const double mu = mu_at(x);
  if (mu >= 1.0) return linear_matrix();
  const int lobe = (x[0] >= 0.0) ? 1 : 2;
  if (mu <= 0.0) return lobe_matrix(lobe);
  SquareMatrix jac = linear_matrix() * mu + lobe_matrix(lobe) * (1.0 - mu);
  if (p_.mode == JacobianMode::FullJacobian) {
    // d/dx of mu(x) (X_lin - X_lobe): outer product of the field difference
    // with the blend gradient, which points along x only.
    const double ax = std::abs(x[0]);
    const double width = p_.lobe_start - p_.linear_half_width;
    const double u = (ax - p_.linear_half_width) / width;
    const double dmu_dx = -smoothstep_deriv(u) / width * ((x[0] >= 0.0) ? 1.0 : -1.0);
    const Vec lin = linear_matrix().apply(x);
    const Vec& c = (lobe == 1) ? p_.center1 : p_.center2;
    const Vec lob = matcore::add(lobe_matrix(lobe).apply(matcore::sub(x, c)), lobe_translation(lobe));
    for (int i = 0; i < 3; ++i) jac(i, 0) += (lin[i] - lob[i]) * dmu_dx;
  }
  return jac;
}

VectorFieldModel GeometricLorenzModel::model() const {
  VectorFieldModel m;
  m.name = "geometric_lorenz";
  m.dim = 3;
  const GeometricLorenzModel self = *this;
  m.velocity = [self](const Vec& x) { return self.velocity(x); };
  m.jacobian = [self](const Vec& x) { return self.jacobian(x); };
  const double r = p_.lobe_start + 6.0;
  m.region = Box{{-r, -r, -r}, {r, r, r}};
  m.form = lorenz_like_form();
  m.region_label = [self](const Vec& x) { return self.region_label(x); };
  return m;
}

VectorFieldModel model_from_config(const kv::Config& cfg) {
  const std::string name = cfg.get("model");
  if (name == "saddle") {
    const auto spec = cfg.get_doubles("spectrum");
    if (spec.size() != 3) throw std::runtime_error("saddle: spectrum needs 3 values");
    return model_linear_saddle(spec[0], spec[1], spec[2], cfg.get_bool_or("relaxed", false));
  }
  if (name == "lorenz") {
    return model_classic_lorenz(cfg.get_double_or("sigma", 10.0), cfg.get_double_or("r", 28.0),
                                cfg.get_double_or("b", 8.0 / 3.0));
  }
  if (name == "geomlorenz") {
    GeometricLorenzParams p;
    if (cfg.has("spectrum")) {
      const auto spec = cfg.get_doubles("spectrum");
      if (spec.size() != 3) throw std::runtime_error("geomlorenz: spectrum needs 3 values");
      p.l1 = spec[0];
      p.l2 = spec[1];
      p.l3 = spec[2];
    }
    p.rho = cfg.get_double_or("rho", p.rho);
    p.zeta = cfg.get_double_or("zeta", p.zeta);
    p.linear_half_width = cfg.get_double_or("linear_half_width", p.linear_half_width);
    p.lobe_start = cfg.get_double_or("lobe_start", p.lobe_start);
    const std::string mode = cfg.get_or("mode", "matrix-family");
    if (mode == "matrix-family")
      p.mode = JacobianMode::MatrixFamily;
    else if (mode == "full-jacobian")
      p.mode = JacobianMode::FullJacobian;
    else
      throw std::runtime_error("geomlorenz: unknown mode '" + mode + "'");
    return GeometricLorenzModel(p).model();
  }
  throw std::runtime_error("unknown model '" + name + "' (expected saddle, lorenz, geomlorenz)");
}

namespace {

struct Rk4Step {
  Vec x_next;
  SquareMatrix transition;        // one-step fundamental matrix
  SquareMatrix wedge_transition;  // one-step wedge map (when requested)
  double trace_increment = 0.0;   // RK4 quadrature of tr DX over the step
};

// One RK4 step. The transition matrices are computed from the identity, so
// the full cocycle is accumulated by left-multiplying well-conditioned
// near-identity factors; this keeps an incremental log-det exact enough for
// the Liouville monitor at any horizon.
Rk4Step rk4_step(const VectorFieldModel& model, const Vec& x, double h, bool with_wedge) {
  const std::size_t n = model.dim;
  const SquareMatrix a1 = model.jacobian(x);
  const Vec k1 = model.velocity(x);

  Vec xs = x;
  matcore::axpy(0.5 * h, k1, xs);
  const SquareMatrix a2 = model.jacobian(xs);
  const Vec k2 = model.velocity(xs);

  xs = x;
  matcore::axpy(0.5 * h, k2, xs);
  const SquareMatrix a3 = model.jacobian(xs);
  const Vec k3 = model.velocity(xs);

  xs = x;
  matcore::axpy(h, k3, xs);
  const SquareMatrix a4 = model.jacobian(xs);
  const Vec k4 = model.velocity(xs);

  Rk4Step out;
  out.x_next = x;
  const double w = h / 6.0;
  for (std::size_t i = 0; i < n; ++i)
    out.x_next[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

  const auto stage_transition = [&](const SquareMatrix& g1, const SquareMatrix& g2,
                                    const SquareMatrix& g3, const SquareMatrix& g4) {
    const std::size_t m = g1.dim();
    const SquareMatrix id = SquareMatrix::identity(m);
    const SquareMatrix p1 = g1;
    const SquareMatrix p2 = g2 * (id + p1 * (0.5 * h));
    const SquareMatrix p3 = g3 * (id + p2 * (0.5 * h));
    const SquareMatrix p4 = g4 * (id + p3 * h);
    return id + (p1 + (p2 + p3) * 2.0 + p4) * w;
  };
  out.transition = stage_transition(a1, a2, a3, a4);
  if (with_wedge) {
    out.wedge_transition =
        stage_transition(forms::wedge_generator(a1), forms::wedge_generator(a2),
                         forms::wedge_generator(a3), forms::wedge_generator(a4));
  }
  out.trace_increment = w * (a1.trace() + 2.0 * a2.trace() + 2.0 * a3.trace() + a4.trace());
  return out;
}

}  // namespace

OrbitSegment integrate(const VectorFieldModel& model, const Vec& x0, double T, double h,
                       bool with_wedge, const matcore::Tolerances& tols) {
  if (!(h > 0.0)) throw std::invalid_argument("integrate: step must be positive");
  if (T < 0.0) throw std::invalid_argument("integrate: negative horizon");
  if (x0.size() != model.dim) throw std::invalid_argument("integrate: state dimension mismatch");

  OrbitSegment orbit;
  const std::size_t steps = (T == 0.0) ? 0 : static_cast<std::size_t>(std::llround(T / h));
  const std::size_t n_steps = (T == 0.0) ? 0 : std::max<std::size_t>(1, steps);
  const double dt = (n_steps == 0) ? h : T / static_cast<double>(n_steps);
  orbit.step = dt;

  const std::size_t wedge_dim =
      model.dim == 3 ? 3 : exterior::CompoundIndexing(model.dim, 2).size();

  Vec x = x0;
  SquareMatrix phi = SquareMatrix::identity(model.dim);
  SquareMatrix wedge = SquareMatrix::identity(wedge_dim);

  orbit.times.push_back(0.0);
  orbit.states.push_back(x);
  orbit.fundamentals.push_back(phi);
  orbit.log_det.push_back(0.0);
  if (with_wedge) orbit.wedge_fundamentals.push_back(wedge);

  double trace_integral = 0.0;
  double log_det = 0.0;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const Rk4Step step = rk4_step(model, x, dt, with_wedge);
    x = step.x_next;
    phi = step.transition * phi;
    if (with_wedge) wedge = step.wedge_transition * wedge;
    trace_integral += step.trace_increment;
    const double step_det = matcore::det(step.transition);
    if (!(step_det > 0.0)) {
      throw std::runtime_error("integrate: step map not orientation-preserving; step too large");
    }
    log_det += std::log(step_det);
    if (!model.region.contains(x)) {
      orbit.truncated = true;
      orbit.exit_index = orbit.times.size() - 1;
      return orbit;
    }
    // Liouville monitor: the accumulated log det must track the trace
    // integral; a large residual means the step cannot resolve the local
    // expansion rates.
    if (std::abs(log_det - trace_integral) >
        tols.liouville_abort * (1.0 + std::abs(trace_integral))) {
      throw std::runtime_error(
          "integrate: Liouville residual exceeds threshold; step too large");
    }
    orbit.times.push_back(dt * static_cast<double>(i + 1));
    orbit.states.push_back(x);
    orbit.fundamentals.push_back(phi);
    orbit.log_det.push_back(log_det);
    if (with_wedge) orbit.wedge_fundamentals.push_back(wedge);
  }
  orbit.exit_index = orbit.times.size() - 1;
  return orbit;
}

SquareMatrix step_transition(const VectorFieldModel& model, const Vec& x, double h) {
  return rk4_step(model, x, h, /*with_wedge=*/false).transition;
}

void orbit_to_csv(const OrbitSegment& orbit, std::ostream& out) {
  const std::size_t n = orbit.states.empty() ? 0 : orbit.states.front().size();
  const std::size_t m =
      orbit.wedge_fundamentals.empty() ? 0 : orbit.wedge_fundamentals.front().dim();
  out << "t";
  for (std::size_t i = 1; i <= n; ++i) out << ",x" << i;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= n; ++j) out << ",phi" << i << j;
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= m; ++j) out << ",w" << i << j;
  out << "\n";
  char buf[32];
  const auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t r = 0; r < orbit.size(); ++r) {
    emit(orbit.times[r]);
    for (std::size_t i = 0; i < n; ++i) {
      out << ',';
      emit(orbit.states[r][i]);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        out << ',';
        emit(orbit.fundamentals[r](i, j));
      }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        out << ',';
        emit(orbit.wedge_fundamentals[r](i, j));
      }
    out << "\n";
  }
}

double jacobian_residual(const VectorFieldModel& model, const std::vector<Vec>& points) {
  const double h = 1e-5;
  double worst = 0.0;
  for (const Vec& x : points) {
    const SquareMatrix jac = model.jacobian(x);
    for (std::size_t j = 0; j < model.dim; ++j) {
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vec fp = model.velocity(xp);
      const Vec fm = model.velocity(xm);
      for (std::size_t i = 0; i < model.dim; ++i) {
        const double fd = (fp[i] - fm[i]) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - jac(i, j)) / (1.0 + jac.max_abs()));
      }
    }
  }
  return worst;
}

}  // namespace hypercone::flow
