#include "hypercone/domination.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "hypercone/exterior.hpp"

namespace hypercone::domination {

namespace {

using StepProvider = std::function<SquareMatrix(std::size_t)>;

// Orthonormal moving frame for a d-dimensional subspace pushed through the
// cocycle, with the restricted operator and its inverse accumulated as
// products of the per-step QR triangles. Norms are read off the accumulated
// factors (sigma_max is well conditioned on both), so the ill-conditioned
// full product never appears.
class RestrictedTrack {
 public:
  explicit RestrictedTrack(const std::vector<Vec>& basis)
      : frame_(basis),
        fwd_(SquareMatrix::identity(basis.size())),
        inv_(SquareMatrix::identity(basis.size())) {}

  void advance(const SquareMatrix& step) {
    const std::size_t d = frame_.size();
    std::vector<Vec> images(d);
    for (std::size_t j = 0; j < d; ++j) images[j] = step.apply(frame_[j]);
    SquareMatrix r(d);
    for (std::size_t j = 0; j < d; ++j) {
      Vec v = images[j];
      for (std::size_t p = 0; p < j; ++p) {
        const double proj = matcore::dot(frame_[p], v);
        r(p, j) = proj;
        matcore::axpy(-proj, frame_[p], v);
      }
      const double len = matcore::norm(v);
      if (len < 1e-13) {
        throw std::runtime_error("restricted cocycle collapsed (sigma_min < 1e-13)");
      }
      r(j, j) = len;
      frame_[j] = matcore::scaled(v, 1.0 / len);
      log_det_ += std::log(len);
    }
    fwd_ = r * fwd_;
    inv_ = inv_ * upper_inverse(r);
    rescale(fwd_, log_scale_fwd_);
    rescale(inv_, log_scale_inv_);
  }

  double log_norm() const { return std::log(matcore::svd(fwd_).sigma.front()) + log_scale_fwd_; }
  double log_inv_norm() const {
    return std::log(matcore::svd(inv_).sigma.front()) + log_scale_inv_;
  }
  double log_det() const { return log_det_; }
  const std::vector<Vec>& frame() const { return frame_; }

 private:
  static SquareMatrix upper_inverse(const SquareMatrix& r) {
    const std::size_t d = r.dim();
    SquareMatrix z(d);
    for (std::size_t col = 0; col < d; ++col) {
      Vec rhs(d, 0.0);
      rhs[col] = 1.0;
      for (std::size_t i = d; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t j = i + 1; j < d; ++j) s -= r(i, j) * z(j, col);
        z(i, col) = s / r(i, i);
      }
    }
    return z;
  }

  static void rescale(SquareMatrix& m, double& log_scale) {
    const double s = m.max_abs();
    if (s > 1e100 || (s > 0.0 && s < 1e-100)) {
      m *= 1.0 / s;
      log_scale += std::log(s);
    }
  }

  std::vector<Vec> frame_;
  SquareMatrix fwd_;
  SquareMatrix inv_;
  double log_scale_fwd_ = 0.0;
  double log_scale_inv_ = 0.0;
  double log_det_ = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  double max_residual = 0.0;  // max (y - slope t), over samples
  double min_residual = 0.0;  // min (y - slope t)
};

LineFit fit_line(const std::vector<double>& ts, const std::vector<double>& ys) {
  const std::size_t n = ts.size();
  if (n < 2) throw std::invalid_argument("fit_line: need at least two samples");
  double st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    st += ts[i];
    sy += ys[i];
  }
  const double mt = st / n, my = sy / n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    sty += (ts[i] - mt) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  LineFit f;
  f.slope = (stt > 0.0) ? sty / stt : 0.0;
  f.intercept = my - f.slope * mt;
  double ss_res = 0.0;
  f.max_residual = -1e300;
  f.min_residual = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - (f.intercept + f.slope * ts[i]);
    ss_res += e * e;
    f.max_residual = std::max(f.max_residual, ys[i] - f.slope * ts[i]);
    f.min_residual = std::min(f.min_residual, ys[i] - f.slope * ts[i]);
  }
  f.r2 = (syy > 1e-28) ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
  return f;
}

enum class RateDirection { Decay, Growth };

DominationReport report_from_fit(const LineFit& f, double t0, double t1,
                                 const RatePolicy& policy, RateDirection dir) {
  DominationReport rep;
  rep.rate = f.slope;
  rep.r2 = f.r2;
  rep.t_min = t0;
  rep.t_max = t1;
  rep.prefactor = (dir == RateDirection::Decay) ? std::max(1.0, std::exp(f.max_residual))
                                                : std::max(1.0, std::exp(-f.min_residual));
  const bool rate_ok = (dir == RateDirection::Decay) ? (f.slope <= -policy.lambda_bar)
                                                     : (f.slope >= policy.lambda_bar);
  rep.pass = rate_ok && f.r2 >= policy.r2_min && rep.prefactor <= policy.k_bar;
  return rep;
}

// log(|A_t|E| * |(A_t|F)^-1|) sampled along the steps and fitted.
DominationReport domination_from_steps(const StepProvider& step, const std::vector<double>& times,
                                       const std::vector<Vec>& e_basis,
                                       const std::vector<Vec>& f_basis,
                                       const RatePolicy& policy) {
  RestrictedTrack e(e_basis), f(f_basis);
  const std::size_t steps = times.size() - 1;
  const std::size_t stride = std::max<std::size_t>(1, steps / 400);
  std::vector<double> ts{0.0}, ys{0.0};
  for (std::size_t i = 0; i < steps; ++i) {
    const SquareMatrix m = step(i);
    e.advance(m);
    f.advance(m);
    if ((i + 1) % stride == 0 || i + 1 == steps) {
      ts.push_back(times[i + 1]);
      ys.push_back(e.log_norm() + f.log_inv_norm());
    }
  }
  return report_from_fit(fit_line(ts, ys), ts.front(), ts.back(), policy, RateDirection::Decay);
}

DominationReport sectional_from_steps(const StepProvider& step, const std::vector<double>& times,
                                      const std::vector<Vec>& plane, const RatePolicy& policy) {
  RestrictedTrack f(plane);
  const std::size_t steps = times.size() - 1;
  const std::size_t stride = std::max<std::size_t>(1, steps / 400);
  std::vector<double> ts{0.0}, ys{0.0};
  for (std::size_t i = 0; i < steps; ++i) {
    f.advance(step(i));
    if ((i + 1) % stride == 0 || i + 1 == steps) {
      ts.push_back(times[i + 1]);
      ys.push_back(f.log_det());
    }
  }
  return report_from_fit(fit_line(ts, ys), ts.front(), ts.back(), policy, RateDirection::Growth);
}

StepProvider base_steps(const VectorFieldModel& model, const OrbitSegment& orbit) {
  return [&model, &orbit](std::size_t i) {
    const double dt = orbit.times[i + 1] - orbit.times[i];
    return flow::step_transition(model, orbit.states[i], dt);
  };
}

std::vector<Vec> orthonormalized(std::vector<Vec> basis, double min_len = 1e-12) {
  for (std::size_t j = 0; j < basis.size(); ++j) {
    for (std::size_t p = 0; p < j; ++p)
      matcore::axpy(-matcore::dot(basis[p], basis[j]), basis[p], basis[j]);
    const double len = matcore::norm(basis[j]);
    if (len < min_len) throw std::invalid_argument("basis is numerically dependent");
    basis[j] = matcore::scaled(basis[j], 1.0 / len);
  }
  return basis;
}

// Cholesky factor of a small SPD matrix.
SquareMatrix cholesky(const SquareMatrix& a, const char* subspace) {
  const std::size_t n = a.dim();
  SquareMatrix l(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
      if (i == j) {
        if (s <= 0.0) {
          throw std::invalid_argument(std::string("adapted_metric_check: subspace ") + subspace +
                                      " is not sign-definite for J");
        }
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

SquareMatrix invert(const SquareMatrix& a) {
  const std::size_t n = a.dim();
  SquareMatrix lu = a;
  SquareMatrix inv = SquareMatrix::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(lu(r, col)) > std::abs(lu(piv, col))) piv = r;
    if (lu(piv, col) == 0.0) throw std::runtime_error("invert: singular matrix");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(lu(piv, j), lu(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    }
    const double d = 1.0 / lu(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      lu(col, j) *= d;
      inv(col, j) *= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = lu(r, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        lu(r, j) -= f * lu(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

}  // namespace

namespace {

SplittingEstimate estimate_core(const VectorFieldModel& model, const Vec& x, double T,
                                std::size_t s, double h, bool with_quality);

double principal_angle_max(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  const std::size_t d = a.size();
  SquareMatrix m(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = matcore::dot(a[i], b[j]);
  const auto sv = matcore::svd(m);
  const double c = std::clamp(sv.sigma.back(), -1.0, 1.0);
  return std::acos(c);
}

SplittingEstimate estimate_core(const VectorFieldModel& model, const Vec& x, double T,
                                std::size_t s, double h, bool with_quality) {
  const std::size_t n = model.dim;
  if (s == 0 || s >= n) throw std::invalid_argument("estimate_splitting: need 0 < s < n");
  const OrbitSegment orbit = flow::integrate(model, x, T, h);
  if (orbit.truncated) {
    throw std::runtime_error("estimate_splitting: orbit left the model region");
  }
  const std::size_t c = n - s;
  const auto sv_fwd = matcore::svd(orbit.fundamentals.back());

  // The trailing right-singular directions of Phi_T are unrecoverable from
  // the assembled product once the singular spread passes 1/eps, so E is
  // read off the inverse cocycle instead: Phi^-1 = V Sigma^-1 U^T makes the
  // most contracted right-singular directions of Phi the dominant left
  // factors of the (log-scaled) inverse product.
  SquareMatrix inv_prod = SquareMatrix::identity(n);
  double inv_log_scale = 0.0;
  for (std::size_t i = 0; i + 1 < orbit.size(); ++i) {
    const SquareMatrix m = flow::step_transition(model, orbit.states[i],
                                                 orbit.times[i + 1] - orbit.times[i]);
    inv_prod = inv_prod * invert(m);
    const double scale = inv_prod.max_abs();
    if (scale > 1e100) {
      inv_prod *= 1.0 / scale;
      inv_log_scale += std::log(scale);
    }
  }
  const auto sv_inv = matcore::svd(inv_prod);

  SplittingEstimate est;
  est.point = x;
  est.horizon = T;
  for (std::size_t j = 0; j < s; ++j) {
    Vec col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = sv_inv.u(i, j);
    est.e_basis.push_back(col);
  }
  // F: orthogonal complement, seeded by the leading forward directions.
  std::vector<Vec> combined = est.e_basis;
  for (std::size_t j = 0; j < n && combined.size() < n; ++j) {
    Vec col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = sv_fwd.v(i, j);
    std::vector<Vec> trial = combined;
    trial.push_back(col);
    try {
      trial = orthonormalized(trial, 1e-6);
    } catch (const std::invalid_argument&) {
      continue;  // parallel to an earlier direction
    }
    combined = trial;
  }
  for (std::size_t j = s; j < n; ++j) est.f_basis.push_back(combined[j]);

  // Boundary ratio sigma_{c+1} / sigma_c in descending order; the E side of
  // the boundary comes from the inverse product so it never floors at
  // roundoff.
  const double log_sigma_e_top =
      -(std::log(std::max(sv_inv.sigma[s - 1], 1e-300)) + inv_log_scale);
  const double log_sigma_f_bottom = std::log(std::max(sv_fwd.sigma[c - 1], 1e-300));
  est.gap_ratio = std::exp(std::clamp(log_sigma_e_top - log_sigma_f_bottom, -700.0, 700.0));

  if (with_quality) {
    // Invariance residual: push E along the orbit and compare against a
    // fresh estimate there. The estimate error is amplified by the full
    // singular spread per unit time, so the push horizon is T/2 capped where
    // the amplification reaches ~1e13 of the frame noise.
    const double log_sigma_top = std::log(std::max(sv_fwd.sigma.front(), 1e-300));
    const double log_sigma_bottom =
        -(std::log(std::max(sv_inv.sigma.front(), 1e-300)) + inv_log_scale);
    const double spread = (log_sigma_top - log_sigma_bottom) / T;
    const double push_time = (spread > 1e-9) ? std::min(0.5 * T, 27.0 / spread) : 0.5 * T;
    std::size_t mid = std::min(orbit.size() - 1,
                               static_cast<std::size_t>(std::llround(push_time / orbit.step)));
    if (mid == 0) mid = 1;
    RestrictedTrack track(est.e_basis);
    for (std::size_t i = 0; i < mid; ++i) {
      track.advance(flow::step_transition(model, orbit.states[i],
                                          orbit.times[i + 1] - orbit.times[i]));
    }
    const SplittingEstimate fresh =
        estimate_core(model, orbit.states[mid], T, s, h, /*with_quality=*/false);
    est.quality = principal_angle_max(track.frame(), fresh.e_basis);
  }
  est.usable = est.gap_ratio < 0.5 && est.quality <= 0.1;
  return est;
}

}  // namespace

SplittingEstimate estimate_splitting(const VectorFieldModel& model, const Vec& x, double T,
                                     std::size_t s, double h) {
  return estimate_core(model, x, T, s, h, /*with_quality=*/true);
}

DominationReport domination_rate(const VectorFieldModel& model, const OrbitSegment& orbit,
                                 const SplittingEstimate& splitting, const RatePolicy& policy) {
  if (orbit.size() < 2) throw std::invalid_argument("domination_rate: orbit too short");
  return domination_from_steps(base_steps(model, orbit), orbit.times, splitting.e_basis,
                               splitting.f_basis, policy);
}

DominationReport sectional_rate(const VectorFieldModel& model, const OrbitSegment& orbit,
                                const std::vector<Vec>& f_basis, const RatePolicy& policy,
                                int plane_samples) {
  if (orbit.size() < 2) throw std::invalid_argument("sectional_rate: orbit too short");
  const auto steps = base_steps(model, orbit);
  if (f_basis.size() == 2) {
    return sectional_from_steps(steps, orbit.times, orthonormalized(f_basis), policy);
  }
  if (f_basis.size() < 2) throw std::invalid_argument("sectional_rate: dim F must be >= 2");
  if (plane_samples <= 0) {
    throw std::invalid_argument(
        "sectional_rate: dim F > 2 requires a plane sampling directive (plane_samples > 0)");
  }
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto ortho_f = orthonormalized(f_basis);
  DominationReport worst;
  bool first = true;
  for (int p = 0; p < plane_samples; ++p) {
    std::vector<Vec> plane(2, Vec(model.dim, 0.0));
    for (auto& v : plane) {
      for (const Vec& f : ortho_f) matcore::axpy(gauss(rng), f, v);
    }
    const DominationReport rep =
        sectional_from_steps(steps, orbit.times, orthonormalized(plane), policy);
    if (first || rep.rate < worst.rate) worst = rep;
    first = false;
  }
  return worst;
}

double delta_area(const std::vector<double>& times, const std::vector<double>& values) {
  const std::size_t n = times.size();
  if (values.size() != n) throw std::invalid_argument("delta_area: grid/value size mismatch");
  if (n < 2) return 0.0;
  const double h = times[1] - times[0];
  std::size_t panels = n - 1;
  double total = 0.0;
  std::size_t i = 0;
  // Composite Simpson over panel pairs; a leftover odd panel is closed with
  // a trapezoid.
  while (panels - i >= 2) {
    total += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
    i += 2;
  }
  if (i < panels) total += 0.5 * h * (values[i] + values[i + 1]);
  return total;
}

std::vector<double> delta_running(const std::vector<double>& times,
                                  const std::vector<double>& values) {
  std::vector<double> out(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
  }
  return out;
}

std::string to_string(Trichotomy t) {
  switch (t) {
    case Trichotomy::FPlusExpanding:
      return "F+-expanding";
    case Trichotomy::FMinusContracting:
      return "F--contracting";
    case Trichotomy::Hyperbolic:
      return "hyperbolic";
    case Trichotomy::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

TrichotomyReport classify_trichotomy(const VectorFieldModel& model,
                                     const std::vector<OrbitSegment>& orbits,
                                     const forms::QuadraticForm& j, forms::DeltaRule rule,
                                     CocycleSide side, const TrichotomyParams& params) {
  TrichotomyReport rep;
  rep.all_separated = true;
  rep.jprime_positive_everywhere = true;
  rep.min_slope = 1e300;
  rep.max_slope = -1e300;

  std::vector<std::vector<double>> orbit_values;
  for (const OrbitSegment& orbit : orbits) {
    std::vector<double> vals;
    vals.reserve(orbit.size());
    for (const Vec& x : orbit.states) {
      const SquareMatrix d = model.jacobian(x);
      const auto interval = forms::delta_interval(j, d);
      if (!interval) {
        rep.all_separated = false;
        break;
      }
      const auto delta = forms::select_delta(j, d, interval, rule);
      double v = *delta;
      const double trace2 = 2.0 * d.trace();
      if (side == CocycleSide::Wedge) v = trace2 - v;
      vals.push_back(v);

      const SquareMatrix pencil_at_zero =
          (side == CocycleSide::Base) ? forms::jprime(j, d)
                                      : forms::jprime(j, d) - j.matrix() * trace2;
      if (!(matcore::sym_eig_min(pencil_at_zero) > 0.0)) rep.jprime_positive_everywhere = false;
    }
    if (!rep.all_separated) break;
    orbit_values.push_back(std::move(vals));
  }

  if (!rep.all_separated) {
    rep.verdict = Trichotomy::Inconclusive;
    return rep;
  }

  bool all_up = true, all_down = true;
  for (std::size_t k = 0; k < orbits.size(); ++k) {
    const OrbitSegment& orbit = orbits[k];
    const std::vector<double> running = delta_running(orbit.times, orbit_values[k]);
    const double duration = orbit.duration();
    const double window = std::min(params.window, duration);
    rep.window = std::max(rep.window, window);
    if (window <= 0.0) continue;
    const double dt = orbit.times[1] - orbit.times[0];
    const std::size_t span = std::max<std::size_t>(1, static_cast<std::size_t>(window / dt));
    for (std::size_t i = 0; i + span < orbit.size(); ++i) {
      const double slope =
          (running[i + span] - running[i]) / (orbit.times[i + span] - orbit.times[i]);
      rep.min_slope = std::min(rep.min_slope, slope);
      rep.max_slope = std::max(rep.max_slope, slope);
      if (slope < params.epsilon) all_up = false;
      if (slope > -params.epsilon) all_down = false;
    }
  }
  // Verdict order: divergence of the delta integral certifies expansion no
  // matter what else holds; a positive-definite pencil at delta = 0 proves
  // both uniform contraction of F- and expansion of F+, so it preempts the
  // contracting-slope case (where the slope depends on the selection rule).
  if (all_up)
    rep.verdict = Trichotomy::FPlusExpanding;
  else if (rep.jprime_positive_everywhere)
    rep.verdict = Trichotomy::Hyperbolic;
  else if (all_down)
    rep.verdict = Trichotomy::FMinusContracting;
  else
    rep.verdict = Trichotomy::Inconclusive;
  return rep;
}

CrosscheckReport exterior_power_crosscheck(const VectorFieldModel& model,
                                     const std::vector<SplittingEstimate>& splittings,
                                     std::size_t k, double T, double h,
                                     const RatePolicy& policy) {
  CrosscheckReport rep;
  const std::size_t n = model.dim;
  for (const SplittingEstimate& est : splittings) {
    const std::size_t s = est.e_basis.size();
    const std::size_t c = est.f_basis.size();
    if (k < 2 || k > c) throw std::invalid_argument("exterior_power_crosscheck: need 2 <= k <= dim F");
    const OrbitSegment orbit = flow::integrate(model, est.point, T, h);
    if (orbit.truncated) throw std::runtime_error("exterior_power_crosscheck: orbit left region");

    CrosscheckSample sample;
    sample.base = domination_rate(model, orbit, est, policy);

    // Wedge splitting: columns of compound([E|F], k) are the wedges of the
    // basis vectors; pure-F index sets span F~, the rest span E~. [E|F] is
    // orthogonal, so its compound is too and the frames are orthonormal.
    SquareMatrix p(n);
    for (std::size_t j = 0; j < s; ++j)
      for (std::size_t i = 0; i < n; ++i) p(i, j) = est.e_basis[j][i];
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t i = 0; i < n; ++i) p(i, s + j) = est.f_basis[j][i];
    const SquareMatrix wedge_p = exterior::compound(p, k);
    const exterior::CompoundIndexing idx(n, k);
    std::vector<Vec> wedge_e, wedge_f;
    for (std::size_t col = 0; col < idx.size(); ++col) {
      const bool pure_f = idx.basis[col].front() >= static_cast<int>(s);
      Vec v(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) v[i] = wedge_p(i, col);
      (pure_f ? wedge_f : wedge_e).push_back(std::move(v));
    }

    const auto base = base_steps(model, orbit);
    const StepProvider wedge_steps = [base, k](std::size_t i) {
      return exterior::compound(base(i), k);
    };
    sample.wedge = domination_from_steps(wedge_steps, orbit.times, wedge_e, wedge_f, policy);
    sample.agree = (sample.base.pass == sample.wedge.pass);
    rep.agree = rep.agree && sample.agree;
    rep.samples.push_back(sample);
  }
  return rep;
}

TangencyReport tangency_check(const VectorFieldModel& model,
                              const std::vector<SplittingEstimate>& splittings,
                              double refine_time, double h) {
  const auto angle_to = [&](const Vec& point, const std::vector<Vec>& f_basis) {
    const Vec velocity = model.velocity(point);
    const double speed = matcore::norm(velocity);
    Vec residual = velocity;
    for (const Vec& f : f_basis) matcore::axpy(-matcore::dot(f, velocity), f, residual);
    return std::asin(std::clamp(matcore::norm(residual) / speed, 0.0, 1.0));
  };

  TangencyReport rep;
  for (const SplittingEstimate& est : splittings) {
    if (matcore::norm(model.velocity(est.point)) <= 1e-8) {
      ++rep.skipped_singular;
      continue;
    }
    rep.max_angle_raw = std::max(rep.max_angle_raw, angle_to(est.point, est.f_basis));

    if (refine_time > 0.0) {
      const OrbitSegment orbit = flow::integrate(model, est.point, refine_time, h);
      RestrictedTrack track(est.f_basis);
      for (std::size_t i = 0; i + 1 < orbit.size(); ++i) {
        track.advance(flow::step_transition(model, orbit.states[i],
                                            orbit.times[i + 1] - orbit.times[i]));
      }
      if (matcore::norm(model.velocity(orbit.states.back())) > 1e-8) {
        rep.max_angle = std::max(rep.max_angle, angle_to(orbit.states.back(), track.frame()));
      }
    } else {
      rep.max_angle = rep.max_angle_raw;
    }
    ++rep.checked;
  }
  if (refine_time <= 0.0) rep.max_angle = rep.max_angle_raw;
  return rep;
}

AdaptedMetricReport adapted_metric_check(const VectorFieldModel& model, const Vec& x0,
                                         const SplittingEstimate& splitting,
                                         const forms::QuadraticForm& j, double T, double h,
                                         std::size_t t_samples) {
  const std::size_t n = model.dim;
  const std::size_t s = splitting.e_basis.size();
  const std::size_t c = splitting.f_basis.size();
  if (s + c != n) throw std::invalid_argument("adapted_metric_check: splitting dims");

  for (const Vec& e : splitting.e_basis) {
    if (!(j.value(e) < 0.0))
      throw std::invalid_argument("adapted_metric_check: subspace E is not J-negative");
  }
  for (const Vec& f : splitting.f_basis) {
    if (!(j.value(f) > 0.0))
      throw std::invalid_argument("adapted_metric_check: subspace F is not J-positive");
  }

  // Gram matrices of J on each factor; S maps adapted coordinates (in which
  // the norm is xi * Euclidean and the splitting is coordinate-aligned) to
  // ambient ones.
  SquareMatrix gram_e(s), gram_f(c);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t jj = 0; jj < s; ++jj)
      gram_e(i, jj) = -matcore::dot(j.matrix().apply(splitting.e_basis[i]), splitting.e_basis[jj]);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t jj = 0; jj < c; ++jj)
      gram_f(i, jj) = matcore::dot(j.matrix().apply(splitting.f_basis[i]), splitting.f_basis[jj]);
  const SquareMatrix lt_e_inv = invert(cholesky(gram_e, "E")).transpose();
  const SquareMatrix lt_f_inv = invert(cholesky(gram_f, "F")).transpose();

  SquareMatrix smat(n);
  for (std::size_t col = 0; col < s; ++col)
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t p = 0; p < s; ++p) v += splitting.e_basis[p][i] * lt_e_inv(p, col);
      smat(i, col) = v;
    }
  for (std::size_t col = 0; col < c; ++col)
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t p = 0; p < c; ++p) v += splitting.f_basis[p][i] * lt_f_inv(p, col);
      smat(i, s + col) = v;
    }
  const SquareMatrix sinv = invert(smat);

  const OrbitSegment orbit = flow::integrate(model, x0, T, h);
  if (orbit.truncated) throw std::runtime_error("adapted_metric_check: orbit left region");

  AdaptedMetricReport rep;
  double sup_speed = 0.0;
  for (const Vec& x : orbit.states) {
    sup_speed = std::max(sup_speed, matcore::norm(sinv.apply(model.velocity(x))));
  }
  rep.xi = (sup_speed > 0.0) ? 1.0 / sup_speed : 1.0;

  std::vector<Vec> e_coords, f_coords;
  for (std::size_t i = 0; i < s; ++i) {
    Vec v(n, 0.0);
    v[i] = 1.0;
    e_coords.push_back(v);
  }
  for (std::size_t i = 0; i < c; ++i) {
    Vec v(n, 0.0);
    v[s + i] = 1.0;
    f_coords.push_back(v);
  }
  RestrictedTrack te(e_coords), tf(f_coords);
  const auto base = base_steps(model, orbit);

  const std::size_t steps = orbit.size() - 1;
  const std::size_t stride = std::max<std::size_t>(1, steps / std::max<std::size_t>(1, t_samples));
  std::vector<double> ts, y_dom, y_contr, y_det;
  for (std::size_t i = 0; i < steps; ++i) {
    const SquareMatrix m = sinv * base(i) * smat;
    te.advance(m);
    tf.advance(m);
    if ((i + 1) % stride == 0 || i + 1 == steps) {
      ts.push_back(orbit.times[i + 1]);
      y_dom.push_back(te.log_norm() + tf.log_inv_norm());
      y_contr.push_back(te.log_norm());
      y_det.push_back(tf.log_det());
    }
  }

  double lambda = 1e300;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    lambda = std::min(lambda, -y_dom[i] / ts[i]);
    lambda = std::min(lambda, -y_contr[i] / ts[i]);
    lambda = std::min(lambda, y_det[i] / ts[i]);
  }
  rep.lambda = lambda;
  rep.pass = lambda > 0.0;
  // Re-verify the three inequalities with prefactor exactly 1 at the
  // reported rate.
  rep.min_margin = 1e300;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    rep.min_margin = std::min(rep.min_margin, -lambda * ts[i] - y_dom[i]);
    rep.min_margin = std::min(rep.min_margin, -lambda * ts[i] - y_contr[i]);
    rep.min_margin = std::min(rep.min_margin, y_det[i] - lambda * ts[i]);
  }
  if (rep.min_margin < -1e-9 * (1.0 + std::abs(lambda) * orbit.duration())) rep.pass = false;
  return rep;
}

}  // namespace hypercone::domination
