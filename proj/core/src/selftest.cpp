#include "hypercone/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "hypercone/certify.hpp"
#include "hypercone/domination.hpp"
#include "hypercone/exterior.hpp"
#include "hypercone/flow.hpp"
#include "hypercone/forms.hpp"
#include "hypercone/matcore.hpp"

namespace hypercone::selftest {

using matcore::SquareMatrix;
using matcore::Vec;

namespace {

// Lorenz-origin spectrum as usually printed; the exact eigenvalues come from
// the quadratic-formula oracle below.
constexpr double kL1 = 11.8277, kL2 = -22.8277, kL3 = -2.6667;

struct LorenzOriginSpectrum {
  double l1, l2, l3;
};

LorenzOriginSpectrum lorenz_origin_oracle(double sigma = 10.0, double r = 28.0,
                                          double b = 8.0 / 3.0) {
  // DX(0) block [[-sigma, sigma], [r, -1]] has trace -(sigma+1) and
  // determinant sigma(1-r); the third eigenvalue is -b.
  const double tr = -(sigma + 1.0);
  const double disc = (sigma + 1.0) * (sigma + 1.0) + 4.0 * sigma * (r - 1.0);
  return {0.5 * (tr + std::sqrt(disc)), 0.5 * (tr - std::sqrt(disc)), -b};
}

forms::QuadraticForm lorenz_form() {
  return forms::QuadraticForm(SquareMatrix::diagonal({1.0, -1.0, 1.0}));
}

SquareMatrix random_rotation3(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  SquareMatrix r = SquareMatrix::identity(3);
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& pq : pairs) {
    const double a = angle(rng);
    SquareMatrix g = SquareMatrix::identity(3);
    g(pq[0], pq[0]) = std::cos(a);
    g(pq[1], pq[1]) = std::cos(a);
    g(pq[0], pq[1]) = -std::sin(a);
    g(pq[1], pq[0]) = std::sin(a);
    r = r * g;
  }
  return r;
}

SquareMatrix random_matrix(std::mt19937_64& rng, std::size_t n, double lim) {
  std::uniform_real_distribution<double> u(-lim, lim);
  SquareMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
  return a;
}

domination::SplittingEstimate axis_splitting(const Vec& point, std::vector<int> e_axes,
                                             std::vector<int> f_axes) {
  domination::SplittingEstimate est;
  est.point = point;
  const std::size_t n = point.size();
  for (int a : e_axes) {
    Vec v(n, 0.0);
    v[a] = 1.0;
    est.e_basis.push_back(v);
  }
  for (int a : f_axes) {
    Vec v(n, 0.0);
    v[a] = 1.0;
    est.f_basis.push_back(v);
  }
  est.usable = true;
  return est;
}

}  // namespace

Check make_check(std::string name, double expected, double got, double tol) {
  Check c;
  c.name = std::move(name);
  c.expected = expected;
  c.got = got;
  c.tol = tol;
  c.pass = std::isfinite(got) && std::abs(got - expected) <= tol;
  return c;
}

Check make_flag(std::string name, bool ok) {
  Check c;
  c.name = std::move(name);
  c.expected = 1.0;
  c.got = ok ? 1.0 : 0.0;
  c.tol = 0.0;
  c.pass = ok;
  return c;
}

Rows criterion1_delta_fixtures(double perturb) {
  Rows rows;
  const forms::QuadraticForm j = lorenz_form();

  const auto iv1 = forms::delta_interval(j, SquareMatrix::diagonal({1.0, -3.0, -0.5}));
  rows.push_back(make_flag("c1.saddle(1,-3,-0.5).separated", iv1.has_value()));
  rows.push_back(make_check("c1.saddle(1,-3,-0.5).delta_lo", -6.0 * (1.0 + perturb),
                            iv1 ? iv1->lo : 0.0, 1e-6));
  rows.push_back(make_check("c1.saddle(1,-3,-0.5).delta_hi", -1.0, iv1 ? iv1->hi : 0.0, 1e-6));

  const LorenzOriginSpectrum sp = lorenz_origin_oracle();
  const auto iv2 = forms::delta_interval(j, SquareMatrix::diagonal({sp.l1, sp.l2, sp.l3}));
  rows.push_back(make_flag("c1.lorenz-origin.separated", iv2.has_value()));
  rows.push_back(
      make_check("c1.lorenz-origin.delta_lo", 2.0 * sp.l2, iv2 ? iv2->lo : 0.0, 1e-3));
  rows.push_back(
      make_check("c1.lorenz-origin.delta_hi", 2.0 * sp.l3, iv2 ? iv2->hi : 0.0, 1e-3));
  return rows;
}

Rows criterion2_delta2_identity() {
  Rows rows;
  std::mt19937_64 rng(7101);
  std::uniform_real_distribution<double> upos(0.5, 2.0);
  std::uniform_real_distribution<double> uval(-1.0, 2.0);
  std::uniform_real_distribution<double> ugap(0.1, 2.0);
  std::uniform_real_distribution<double> uentry(-2.0, 2.0);

  double worst_endpoint = 0.0;
  double worst_generator = 0.0;
  int nonempty = 0;
  bool emptiness_consistent = true;
  const SquareMatrix h = exterior::hodge3_basis_change();

  for (int trial = 0; trial < 500; ++trial) {
    const SquareMatrix r = random_rotation3(rng);
    const SquareMatrix rt = r.transpose();
    const SquareMatrix j0 = SquareMatrix::diagonal({upos(rng), -upos(rng), upos(rng)});
    const forms::QuadraticForm j(rt * j0 * r);

    SquareMatrix d(3);
    if (trial % 2 == 0) {
      // Structured half: diagonal family conjugated with J, feasible by
      // construction (d2 below both d1 and d3).
      const double d1 = uval(rng), d3 = uval(rng);
      const double d2 = std::min(d1, d3) - ugap(rng);
      d = rt * SquareMatrix::diagonal({d1, d2, d3}) * r;
    } else {
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t jj = 0; jj < 3; ++jj) d(i, jj) = uentry(rng);
    }

    const auto base = forms::delta_interval(j, d);
    const forms::WedgeSeparation ws = forms::wedge_separation(j, d);
    if (base.has_value() != ws.delta2.has_value()) emptiness_consistent = false;
    if (base && ws.delta2) {
      ++nonempty;
      const double trace2 = 2.0 * d.trace();
      worst_endpoint = std::max(worst_endpoint, std::abs(ws.delta2->lo - (trace2 - base->hi)));
      worst_endpoint = std::max(worst_endpoint, std::abs(ws.delta2->hi - (trace2 - base->lo)));
    }

    const SquareMatrix lhs = h * exterior::additive_compound(d, 2) * h;
    worst_generator = std::max(worst_generator, (lhs - forms::wedge_generator(d)).max_abs());
  }
  rows.push_back(make_flag("c2.emptiness-agreement(500 pairs)", emptiness_consistent));
  rows.push_back(make_flag("c2.nonempty-sample>=200", nonempty >= 200));
  rows.push_back(make_check("c2.delta2=2tr-delta.endpoint-dev", 0.0, worst_endpoint, 1e-9));
  rows.push_back(
      make_check("c2.wedge-generator.hodge-conjugacy", 0.0, worst_generator, 1e-12));
  return rows;
}

Rows criterion3_cauchy_binet() {
  Rows rows;
  std::mt19937_64 rng(7301);

  double worst_mult = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 3);
    const std::size_t k = (trial % 2 == 0 || n == 3) ? 2 : 3;
    const SquareMatrix a = random_matrix(rng, n, 1.0);
    const SquareMatrix b = random_matrix(rng, n, 1.0);
    const SquareMatrix lhs = exterior::compound(a * b, k);
    const SquareMatrix rhs = exterior::compound(a, k) * exterior::compound(b, k);
    const double scale = std::pow(1.0 + a.inf_norm() * b.inf_norm(), static_cast<double>(k));
    worst_mult = std::max(worst_mult, (lhs - rhs).max_abs() / scale);
  }
  rows.push_back(make_check("c3.cauchy-binet(1000 pairs,n<=5)", 0.0, worst_mult, 1e-9));

  double worst_gen = 0.0;
  std::uniform_real_distribution<double> ut(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 2);
    const std::size_t k = (trial % 3 == 0 && n == 4) ? 3 : 2;
    SquareMatrix a = random_matrix(rng, n, 1.0);
    const double nrm = a.inf_norm();
    if (nrm > 3.0) a *= 3.0 / nrm;
    const double t = ut(rng);
    const SquareMatrix lhs = exterior::compound(matcore::expm(a, t), k);
    const SquareMatrix rhs = matcore::expm(exterior::additive_compound(a, k), t);
    worst_gen = std::max(worst_gen, (lhs - rhs).max_abs());
  }
  rows.push_back(make_check("c3.generator-consistency(200)", 0.0, worst_gen, 1e-8));
  return rows;
}

Rows criterion4_saddle_rates() {
  Rows rows;
  const flow::VectorFieldModel model = flow::model_linear_saddle(kL1, kL2, kL3);
  const Vec origin{0.0, 0.0, 0.0};
  const flow::OrbitSegment orbit = flow::integrate(model, origin, 5.0, 1e-3);
  const auto split = axis_splitting(origin, {1}, {0, 2});

  const auto dom = domination::domination_rate(model, orbit, split);
  rows.push_back(make_check("c4.domination-rate", kL2 - kL3, dom.rate,
                            0.01 * std::abs(kL2 - kL3)));
  rows.push_back(make_flag("c4.domination-fit(r2,K)", dom.pass));

  const auto sec = domination::sectional_rate(model, orbit, split.f_basis);
  rows.push_back(make_check("c4.sectional-rate", kL1 + kL3, sec.rate,
                            0.01 * std::abs(kL1 + kL3)));
  rows.push_back(make_flag("c4.sectional-fit(r2,K)", sec.pass));

  const auto metric =
      domination::adapted_metric_check(model, origin, split, lorenz_form(), 5.0, 1e-3, 50);
  rows.push_back(make_check("c4.adapted-metric-lambda", kL1 + kL3, metric.lambda,
                            0.01 * std::abs(kL1 + kL3)));
  rows.push_back(make_flag("c4.adapted-metric-prefactor-1", metric.pass));
  return rows;
}

Rows criterion5_geometric_lorenz() {
  Rows rows;
  std::ostringstream job_text;
  job_text << "model = geomlorenz\n"
           << "spectrum = " << kL1 << " " << kL2 << " " << kL3 << "\n"
           << "rho = 0.05\nzeta = 0.05\nmode = matrix-family\n"
           << "sampling = regions\nlinear_res = 3\nlobe_res = 3\nmu_steps = 101\n"
           << "checks = separation wedge\ndelta_rule = near-lo\n";
  const certify::CertifyJob job =
      certify::parse_job(kv::Config::parse_string(job_text.str(), "selftest-c5"));
  const certify::CertifyOutcome outcome = certify::run_certify(job);

  rows.push_back(make_flag("c5.exit-code-0", outcome.exit_code == 0));
  rows.push_back(make_flag("c5.all-separated", outcome.summary.all_separated));
  rows.push_back(make_flag("c5.all-wedge-separated", outcome.summary.all_wedge_separated));
  rows.push_back(make_flag("c5.delta2>0-under-near-lo",
                           outcome.summary.all_delta2_selected_positive));

  // The linear region carries the common delta band with endpoints 2 l2
  // and 2 l3; the lobe and transition bands sit elsewhere and are reported
  // per region.
  const auto band = outcome.summary.region_delta_bands.find("linear");
  const bool have_band = band != outcome.summary.region_delta_bands.end();
  rows.push_back(make_flag("c5.linear-region-band-nonempty", have_band));
  if (have_band) {
    rows.push_back(make_check("c5.linear-band-lo", 2.0 * kL2, band->second.lo, 1e-6));
    rows.push_back(make_check("c5.linear-band-hi", 2.0 * kL3, band->second.hi, 1e-6));
  }

  const flow::GeometricLorenzModel geom(flow::GeometricLorenzParams{});
  const SquareMatrix jt = forms::jprime(lorenz_form(), geom.lobe_matrix(1));
  rows.push_back(make_check("c5.lobe-jprime-11", 1.1828, jt(0, 0), 1e-3));
  rows.push_back(make_check("c5.lobe-jprime-22", 2.2828, jt(1, 1), 1e-3));
  rows.push_back(make_check("c5.lobe-jprime-33", 1.1828, jt(2, 2), 1e-3));
  rows.push_back(make_flag("c5.lobe-jprime-positive-definite",
                           matcore::sym_eig_min(jt) > 0.0));
  return rows;
}

Rows criterion6_biform_signature() {
  Rows rows;
  const forms::QuadraticForm j(SquareMatrix::diagonal({-1.0, -1.0, 1.0, 1.0}));
  const SquareMatrix biform = exterior::induced_biform(j);
  const auto eig = matcore::sym_eig(biform);
  int pos = 0, neg = 0;
  for (double v : eig.values) (v > 0.0 ? pos : neg) += 1;
  rows.push_back(make_check("c6.biform-positive-count", 2.0, pos, 0.0));
  rows.push_back(make_check("c6.biform-negative-count", 4.0, neg, 0.0));
  rows.push_back(make_flag("c6.mixed-signature", pos > 0 && neg > 0));
  return rows;
}

Rows criterion7_theoremA() {
  Rows rows;
  const flow::VectorFieldModel saddle = flow::model_linear_saddle(kL1, kL2, kL3);
  const Vec origin{0.0, 0.0, 0.0};

  // Correct splitting at the singularity: estimated, not assumed.
  const auto est = domination::estimate_splitting(saddle, origin, 3.0, 1, 1e-3);
  const auto pass_rep = domination::exterior_power_crosscheck(saddle, {est}, 2, 4.0, 1e-3);
  bool saddle_ok = pass_rep.agree;
  for (const auto& s : pass_rep.samples) saddle_ok = saddle_ok && s.base.pass && s.wedge.pass;
  rows.push_back(make_flag("c7.saddle.agree-pass", saddle_ok));
  rows.push_back(make_flag("c7.saddle.splitting-usable", est.usable));

  // Swapped splitting (expanding axis moved into E): both sides must fail.
  const auto swapped = axis_splitting(origin, {0}, {1, 2});
  const auto fail_rep = domination::exterior_power_crosscheck(saddle, {swapped}, 2, 4.0, 1e-3);
  bool swapped_ok = fail_rep.agree;
  for (const auto& s : fail_rep.samples)
    swapped_ok = swapped_ok && !s.base.pass && !s.wedge.pass;
  rows.push_back(make_flag("c7.swapped.agree-fail", swapped_ok));

  // Classic Lorenz attractor samples. The fit window is capped near the
  // precision wall log(1/eps) / (top-minus-bottom exponent spread), beyond
  // which the contracted restriction carries no information.
  const flow::VectorFieldModel lorenz = flow::model_classic_lorenz(10.0, 28.0, 8.0 / 3.0);
  const double h = 5e-4;
  flow::OrbitSegment transit = flow::integrate(lorenz, {1.0, 1.0, 1.0}, 30.0, h);
  std::vector<domination::SplittingEstimate> splits;
  Vec x = transit.states.back();
  for (int i = 0; i < 6; ++i) {
    splits.push_back(domination::estimate_splitting(lorenz, x, 15.0, 1, h));
    x = flow::integrate(lorenz, x, 2.0, h).states.back();
  }
  const auto lz = domination::exterior_power_crosscheck(lorenz, splits, 2, 1.5, h);
  bool lorenz_ok = lz.agree;
  std::size_t agreeing = 0;
  for (const auto& s : lz.samples) {
    lorenz_ok = lorenz_ok && s.base.pass && s.wedge.pass;
    if (s.agree) ++agreeing;
  }
  rows.push_back(make_flag("c7.lorenz.agree-pass(6 samples)", lorenz_ok));
  rows.push_back(make_check("c7.lorenz.agreement-fraction", 1.0,
                            static_cast<double>(agreeing) /
                                static_cast<double>(lz.samples.size()),
                            0.0));
  return rows;
}

Rows criterion8_properties() {
  Rows rows;
  const forms::QuadraticForm j = lorenz_form();

  // Liouville residual on the fixture orbits.
  const auto liouville_residual = [](const flow::VectorFieldModel& model,
                                     const flow::OrbitSegment& orbit) {
    std::vector<double> traces;
    traces.reserve(orbit.size());
    for (const Vec& x : orbit.states) traces.push_back(model.jacobian(x).trace());
    const double integral = domination::delta_area(orbit.times, traces);
    return std::abs(orbit.log_det.back() - integral) / (1.0 + std::abs(integral));
  };

  const flow::VectorFieldModel saddle = flow::model_linear_saddle(kL1, kL2, kL3);
  const flow::OrbitSegment saddle_orbit = flow::integrate(saddle, {0.0, 0.0, 0.0}, 5.0, 5e-4);
  rows.push_back(make_check("c8.liouville.saddle", 0.0,
                            liouville_residual(saddle, saddle_orbit), 1e-6));

  const flow::VectorFieldModel lorenz = flow::model_classic_lorenz(10.0, 28.0, 8.0 / 3.0);
  const Vec seed = flow::integrate(lorenz, {1.0, 1.0, 1.0}, 20.0, 5e-4).states.back();
  const flow::OrbitSegment lorenz_orbit = flow::integrate(lorenz, seed, 10.0, 2.5e-4);
  rows.push_back(make_check("c8.liouville.classic-lorenz", 0.0,
                            liouville_residual(lorenz, lorenz_orbit), 1e-6));

  flow::GeometricLorenzParams gp;
  gp.mode = flow::JacobianMode::FullJacobian;
  const flow::VectorFieldModel geom = flow::GeometricLorenzModel(gp).model();
  const flow::OrbitSegment geom_orbit = flow::integrate(geom, {3.1, 0.4, 0.2}, 3.0, 2.5e-4);
  rows.push_back(make_check("c8.liouville.geometric-lorenz", 0.0,
                            liouville_residual(geom, geom_orbit), 1e-6));

  // Cocycle re-basing on the classic Lorenz orbit.
  {
    const flow::OrbitSegment full = flow::integrate(lorenz, seed, 2.0, 2.5e-4);
    const std::size_t mid = full.size() / 2;
    const flow::OrbitSegment tail =
        flow::integrate(lorenz, full.states[mid], full.times.back() - full.times[mid], 2.5e-4);
    const SquareMatrix rebased = tail.fundamentals.back() * full.fundamentals[mid];
    const double dev = (rebased - full.fundamentals.back()).max_abs() /
                       full.fundamentals.back().max_abs();
    rows.push_back(make_check("c8.cocycle-rebase.classic-lorenz", 0.0, dev, 1e-6));
  }

  // Growth of |J| along J-positive vectors dominates exp(Delta) up to
  // quadrature slack.
  const auto growth_check = [](const flow::VectorFieldModel& model,
                               const forms::QuadraticForm& form,
                               const flow::OrbitSegment& orbit, const Vec& v0,
                               std::size_t stride) {
    std::vector<double> ts, deltas;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < orbit.size(); i += stride) {
      const auto interval = forms::delta_interval(form, model.jacobian(orbit.states[i]));
      if (!interval) break;
      ts.push_back(orbit.times[i]);
      deltas.push_back(
          *forms::select_delta(form, model.jacobian(orbit.states[i]), interval,
                               forms::DeltaRule::Midpoint));
      idx.push_back(i);
    }
    if (ts.size() < 3) return false;
    const std::size_t a = ts.size() / 4, b = (3 * ts.size()) / 4;
    const double jva = form.value(orbit.fundamentals[idx[a]].apply(v0));
    const double jvb = form.value(orbit.fundamentals[idx[b]].apply(v0));
    if (!(jva > 0.0 && jvb > 0.0)) return false;
    const double delta_ab =
        domination::delta_area(std::vector<double>(ts.begin() + a, ts.begin() + b + 1),
                               std::vector<double>(deltas.begin() + a, deltas.begin() + b + 1));
    const double slack = 1e-5 * (1.0 + std::abs(delta_ab));
    return std::log(jvb) - std::log(jva) >= delta_ab - slack;
  };

  {
    const flow::VectorFieldModel small = flow::model_linear_saddle(1.0, -3.0, -0.5);
    const flow::OrbitSegment orbit = flow::integrate(small, {0.0, 0.0, 0.0}, 3.0, 1e-3);
    rows.push_back(make_flag("c8.jgrowth.saddle(1,-3,-0.5)",
                             growth_check(small, j, orbit, {1.0, 0.3, 0.8}, 50)));
    rows.push_back(make_flag("c8.jgrowth.saddle(lorenz-spectrum)",
                             growth_check(saddle, j, saddle_orbit, {1.0, 0.2, 0.5}, 100)));
    // The classic-Lorenz certificate (origin-adapted form) covers the
    // near-origin prefix of the orbit; the check runs inside it.
    const flow::OrbitSegment near_origin = flow::integrate(lorenz, {0.1, 0.1, 0.1}, 20.0, 5e-4);
    rows.push_back(make_flag("c8.jgrowth.classic-lorenz-prefix",
                             growth_check(lorenz, *lorenz.form, near_origin, {0.0, 0.0, 1.0},
                                          20)));
  }

  // Reversal symmetry of the feasible interval on random triples.
  {
    std::mt19937_64 rng(7801);
    std::uniform_real_distribution<double> upos(0.5, 2.0);
    std::uniform_real_distribution<double> uentry(-2.0, 2.0);
    double worst = 0.0;
    bool consistent = true;
    for (int trial = 0; trial < 200; ++trial) {
      const SquareMatrix r = random_rotation3(rng);
      const SquareMatrix j0 = (trial % 2 == 0)
                                  ? SquareMatrix::diagonal({upos(rng), -upos(rng), upos(rng)})
                                  : SquareMatrix::diagonal({-upos(rng), upos(rng), -upos(rng)});
      const forms::QuadraticForm jr(r.transpose() * j0 * r);
      SquareMatrix d(3);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t jj = 0; jj < 3; ++jj) d(i, jj) = uentry(rng);

      const auto fwd = forms::delta_interval(jr, d);
      const auto rev = forms::delta_interval(jr.negated(), d * -1.0);
      if (fwd.has_value() != rev.has_value()) {
        consistent = false;
        continue;
      }
      if (fwd) {
        worst = std::max(worst, std::abs(rev->hi + fwd->lo));
        worst = std::max(worst, std::abs(rev->lo + fwd->hi));
      }
    }
    rows.push_back(make_flag("c8.reversal.emptiness-agreement", consistent));
    rows.push_back(make_check("c8.reversal.endpoint-dev(200)", 0.0, worst, 1e-7));
  }
  return rows;
}

int run(std::ostream& out, const Options& opts) {
  Rows all;
  const auto take = [&all](const Rows& rows) {
    all.insert(all.end(), rows.begin(), rows.end());
  };
  take(criterion1_delta_fixtures(opts.perturb));
  take(criterion2_delta2_identity());
  take(criterion3_cauchy_binet());
  take(criterion4_saddle_rates());
  take(criterion5_geometric_lorenz());
  take(criterion6_biform_signature());
  take(criterion7_theoremA());
  take(criterion8_properties());

  int failures = 0;
  char buf[160];
  out << "check                                        expected         got              "
         "tol        verdict\n";
  for (const Check& c : all) {
    std::snprintf(buf, sizeof buf, "%-44s %-16.10g %-16.10g %-10.2g %s\n", c.name.c_str(),
                  c.expected, c.got, c.tol, c.pass ? "PASS" : "FAIL");
    out << buf;
    if (!c.pass) ++failures;
  }
  std::snprintf(buf, sizeof buf, "selftest: %zu checks, %d failed\n", all.size(), failures);
  out << buf;
  return failures == 0 ? 0 : 1;
}

}  // namespace hypercone::selftest
