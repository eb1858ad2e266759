#include "hypercone/forms.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "hypercone/exterior.hpp"

namespace hypercone::forms {

SquareMatrix jprime(const QuadraticForm& j, const SquareMatrix& d) {
  if (j.dim() != d.dim()) throw std::invalid_argument("jprime: dimension mismatch");
  const SquareMatrix jd = j.matrix() * d;
  return jd + jd.transpose();
}

Witness separation_witness(const QuadraticForm& j, const SquareMatrix& d, double delta) {
  const SquareMatrix pencil = jprime(j, d) - j.matrix() * delta;
  Witness w;
  w.margin = matcore::sym_eig_min(pencil);
  w.ok = w.margin > 0.0;
  return w;
}

namespace {

// lambda_min(J' - delta J) as a function of delta; concave because it is an
// infimum of affine functions of delta.
struct PencilMargin {
  const SquareMatrix& jp;
  const SquareMatrix& j;
  double operator()(double delta) const {
    return matcore::sym_eig_min(jp - j * delta);
  }
};

double golden_max(const PencilMargin& f, double a, double b, double tol) {
  const double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

// Root of f between lo (f < 0) and hi (f > 0) or the reverse; plain
// bisection on the sign.
double bisect_root(const PencilMargin& f, double neg_side, double pos_side, double tol) {
  double a = neg_side, b = pos_side;
  while (std::abs(b - a) > tol) {
    const double mid = 0.5 * (a + b);
    if (f(mid) > 0.0)
      b = mid;
    else
      a = mid;
  }
  return 0.5 * (a + b);
}

std::optional<Interval> pencil_interval(const SquareMatrix& jp, const SquareMatrix& j,
                                        const matcore::Tolerances& tols) {
  const PencilMargin f{jp, j};

  // Any feasible delta obeys |delta| <= |J'|_2 / min |eig(J)|; widen the
  // scan to that provable bound when it exceeds the default 10 (1 + |J'|).
  const auto jeig = matcore::sym_eig(j);
  double mu_min = std::abs(jeig.values.front());
  for (double v : jeig.values) mu_min = std::min(mu_min, std::abs(v));
  const double jp_bound = jp.inf_norm();
  double w = 10.0 * (1.0 + jp.inf_norm());
  if (mu_min > 0.0) w = std::max(w, jp_bound / mu_min + 1.0);

  const int scan_points = 201;
  double best_delta = 0.0, best_val = -1e300;
  for (int i = 0; i < scan_points; ++i) {
    const double delta = -w + 2.0 * w * i / (scan_points - 1);
    const double val = f(delta);
    if (val > best_val) {
      best_val = val;
      best_delta = delta;
    }
  }
  const double span = 2.0 * w / (scan_points - 1);
  const double peak = golden_max(f, best_delta - span, best_delta + span,
                                 std::max(tols.pencil_bisect, 1e-13 * w));
  if (f(peak) <= 0.0) return std::nullopt;

  Interval out;
  out.lo = bisect_root(f, -w, peak, tols.pencil_bisect);
  out.hi = bisect_root(f, w, peak, tols.pencil_bisect);
  return out;
}

}  // namespace

std::optional<Interval> delta_interval(const QuadraticForm& j, const SquareMatrix& d,
                                       const matcore::Tolerances& tols) {
  return pencil_interval(jprime(j, d), j.matrix(), tols);
}

SquareMatrix wedge_generator(const SquareMatrix& d) {
  if (d.dim() == 3) {
    return SquareMatrix::identity(3) * d.trace() - d.transpose();
  }
  return exterior::additive_compound(d, 2);
}

WedgeSeparation wedge_separation(const QuadraticForm& j, const SquareMatrix& d,
                                 const matcore::Tolerances& tols) {
  if (j.dim() != 3 || d.dim() != 3) {
    throw std::invalid_argument("wedge_separation: hypothesis violation, requires n = 3");
  }
  if (j.index() != 1) {
    throw std::invalid_argument("wedge_separation: hypothesis violation, requires index(J) = 1");
  }
  const double trace2 = 2.0 * d.trace();
  const SquareMatrix jp2 = jprime(j, d) - j.matrix() * trace2;

  WedgeSeparation out;
  out.criterion2 = matcore::sym_eig_min(jp2) > 0.0;
  out.delta2 = pencil_interval(jp2, j.matrix() * -1.0, tols);

  // The pencil above equals J' - (2 tr D - d2) J, so the endpoints must be
  // the order-reversed map of the delta interval.
  const auto base = delta_interval(j, d, tols);
  const double tol = 10.0 * tols.pencil_endpoint * (1.0 + std::abs(trace2));
  if (base.has_value() != out.delta2.has_value()) {
    throw std::logic_error("wedge_separation: delta2 emptiness disagrees with delta map");
  }
  if (base) {
    if (std::abs(out.delta2->lo - (trace2 - base->hi)) > tol ||
        std::abs(out.delta2->hi - (trace2 - base->lo)) > tol) {
      throw std::logic_error("wedge_separation: delta2 endpoints disagree with 2 tr(D) - delta");
    }
  }
  return out;
}

SeparationCertificate certify_point(const QuadraticForm& j, const SquareMatrix& d,
                                    const Vec& point, bool with_wedge,
                                    const matcore::Tolerances& tols) {
  SeparationCertificate cert;
  cert.point = point;
  cert.trace2 = 2.0 * d.trace();
  cert.delta = delta_interval(j, d, tols);
  cert.verdicts.strictly_separated = cert.delta.has_value();
  cert.verdicts.delta_negative_feasible = cert.delta && cert.delta->lo < 0.0;
  if (with_wedge) {
    const WedgeSeparation ws = wedge_separation(j, d, tols);
    cert.delta2 = ws.delta2;
    cert.criterion2 = ws.criterion2;
    cert.verdicts.wedge_separated = ws.delta2.has_value();
    cert.verdicts.delta2_positive_feasible = ws.delta2 && ws.delta2->hi > 0.0;
  }
  return cert;
}

DeltaRule delta_rule_from_string(const std::string& name) {
  if (name == "midpoint") return DeltaRule::Midpoint;
  if (name == "max-margin") return DeltaRule::MaxMargin;
  if (name == "near-lo") return DeltaRule::NearLo;
  throw std::invalid_argument("unknown delta rule: " + name);
}

std::string to_string(DeltaRule rule) {
  switch (rule) {
    case DeltaRule::Midpoint:
      return "midpoint";
    case DeltaRule::MaxMargin:
      return "max-margin";
    case DeltaRule::NearLo:
      return "near-lo";
  }
  return "midpoint";
}

std::optional<double> select_delta(const QuadraticForm& j, const SquareMatrix& d,
                                   const std::optional<Interval>& interval, DeltaRule rule) {
  if (!interval) return std::nullopt;
  switch (rule) {
    case DeltaRule::Midpoint:
      return interval->midpoint();
    case DeltaRule::NearLo:
      return interval->lo + 1e-3 * interval->width();
    case DeltaRule::MaxMargin: {
      const SquareMatrix jp = jprime(j, d);
      const PencilMargin f{jp, j.matrix()};
      return golden_max(f, interval->lo, interval->hi, 1e-10 * (1.0 + interval->width()));
    }
  }
  return interval->midpoint();
}

ConeQuotientBounds cone_quotient_bounds(const QuadraticForm& j, const SquareMatrix& d,
                                        int samples, unsigned seed) {
  const std::size_t n = j.dim();
  const SquareMatrix jp = jprime(j, d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ConeQuotientBounds b;
  b.sup_negative = -1e300;
  b.inf_positive = 1e300;
  for (int s = 0; s < samples; ++s) {
    Vec v(n);
    for (double& x : v) x = gauss(rng);
    const double jv = matcore::dot(j.matrix().apply(v), v);
    if (std::abs(jv) < 1e-8) continue;
    const double q = matcore::dot(jp.apply(v), v) / jv;
    if (jv < 0.0)
      b.sup_negative = std::max(b.sup_negative, q);
    else
      b.inf_positive = std::min(b.inf_positive, q);
  }
  return b;
}

}  // namespace hypercone::forms
