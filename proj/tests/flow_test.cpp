#include <cmath>
#include <sstream>

#include "doctest.h"
#include "hypercone/exterior.hpp"
#include "hypercone/flow.hpp"
#include "oracles.hpp"

using namespace hypercone;
using matcore::SquareMatrix;
using matcore::Vec;

TEST_CASE("linear saddle model definition and spectrum ordering") {
  const auto m = flow::model_linear_saddle(1.0, -3.0, -0.5);
  const Vec v = m.velocity({1.0, 1.0, 1.0});
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(v[1] == doctest::Approx(-3.0));
  CHECK(v[2] == doctest::Approx(-0.5));
  CHECK(m.form.has_value());
  CHECK(m.form->index() == 1);

  CHECK_THROWS_AS(flow::model_linear_saddle(1.0, -0.5, -3.0), std::invalid_argument);
  CHECK_NOTHROW(flow::model_linear_saddle(0.0, 0.0, 0.0, /*relaxed=*/true));
}

TEST_CASE("saddle fundamentals and states match the closed form") {
  const auto m = flow::model_linear_saddle(1.0, -3.0, -0.5);
  const auto orbit = flow::integrate(m, {0.0, 0.0, 0.0}, 1.0, 1e-3);
  const SquareMatrix expected = matcore::expm(SquareMatrix::diagonal({1.0, -3.0, -0.5}), 1.0);
  CHECK((orbit.fundamentals.back() - expected).max_abs() < 1e-7);

  const Vec x0{0.001, 1.0, 1.0};
  const auto states = flow::integrate(m, x0, 1.0, 1e-3);
  const Vec exact{0.001 * std::exp(1.0), std::exp(-3.0), std::exp(-0.5)};
  CHECK(matcore::norm(matcore::sub(states.states.back(), exact)) < 1e-7);
}

TEST_CASE("classic Lorenz: singularity, origin spectrum, Jacobian consistency") {
  const auto m = flow::model_classic_lorenz(10.0, 28.0, 8.0 / 3.0);
  CHECK(matcore::norm(m.velocity({0.0, 0.0, 0.0})) == 0.0);

  const SquareMatrix dx0 = m.jacobian({0.0, 0.0, 0.0});
  const auto sp = oracles::lorenz_origin();
  for (double ev : {sp.l1, sp.l2, sp.l3}) {
    const SquareMatrix shifted = dx0 - SquareMatrix::identity(3) * ev;
    CHECK(std::abs(matcore::det(shifted)) < 1e-8 * std::pow(1.0 + dx0.inf_norm(), 3));
  }

  CHECK(flow::jacobian_residual(m, {{1.0, 2.0, 3.0}}) < 1e-6);
  CHECK_THROWS_AS(flow::model_classic_lorenz(-1.0, 28.0, 1.0), std::invalid_argument);
}

TEST_CASE("geometric Lorenz: lobe matrices, translations and labels") {
  flow::GeometricLorenzParams p;  // printed Lorenz spectrum, rho = zeta = 0.05
  const flow::GeometricLorenzModel geom(p);

  const SquareMatrix a1 = geom.lobe_matrix(1);
  CHECK(a1(0, 0) == doctest::Approx(0.05 * p.l1));
  CHECK(a1(0, 2) == doctest::Approx(1.0));   // -(-1)^1
  CHECK(a1(2, 0) == doctest::Approx(-1.0));  // (-1)^1
  CHECK(a1(1, 1) == doctest::Approx(0.05 * p.l2));
  const SquareMatrix a2 = geom.lobe_matrix(2);
  CHECK(a2(0, 2) == doctest::Approx(-1.0));
  CHECK(a2(2, 0) == doctest::Approx(1.0));

  // The lobe field meets the linear one at the interface on the x-axis.
  const Vec q{p.lobe_start, 0.0, 0.0};
  const Vec lin = geom.linear_matrix().apply(q);
  const Vec lob = matcore::add(geom.lobe_matrix(1).apply(matcore::sub(q, p.center1)),
                               geom.lobe_translation(1));
  CHECK(matcore::norm(matcore::sub(lin, lob)) < 1e-12);

  CHECK(geom.region_label({0.2, 0.0, 0.0}) == "linear");
  CHECK(geom.region_label({3.0, 0.0, 0.0}) == "lobe1");
  CHECK(geom.region_label({-3.0, 0.0, 0.0}) == "lobe2");
  CHECK(geom.region_label({1.5, 0.0, 0.0}) == "transition1");
  CHECK(geom.region_label({-1.5, 0.0, 0.0}) == "transition2");
}

TEST_CASE("geometric Lorenz blend: endpoints, inverse, transition Jacobians") {
  flow::GeometricLorenzParams p;
  const flow::GeometricLorenzModel geom(p);

  CHECK(geom.mu_at({0.5, 0.0, 0.0}) == 1.0);
  CHECK(geom.mu_at({2.5, 0.0, 0.0}) == 0.0);
  for (double mu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double x = geom.x_for_mu(mu, +1);
    CHECK(geom.mu_at({x, 0.0, 0.0}) == doctest::Approx(mu).epsilon(1e-9));
  }

  // Blend endpoint: at mu = 1 the matrix family is exactly D.
  const double x1 = geom.x_for_mu(1.0, +1);
  CHECK((geom.jacobian({x1, 0.0, 0.0}) - geom.linear_matrix()).max_abs() < 1e-12);

  // mu = 1/2: matrix family is the midpoint and its J' matches the
  // transitional display evaluated directly.
  const double xh = geom.x_for_mu(0.5, +1);
  const SquareMatrix mid = geom.jacobian({xh, 0.0, 0.0});
  CHECK((mid - (geom.linear_matrix() * 0.5 + geom.lobe_matrix(1) * 0.5)).max_abs() < 1e-9);

  const forms::QuadraticForm j(SquareMatrix::diagonal({1.0, -1.0, 1.0}));
  const SquareMatrix jt = forms::jprime(j, mid);
  const double mu = 0.5, rho = p.rho, zeta = p.zeta;
  CHECK(jt(0, 0) == doctest::Approx(2.0 * p.l1 * (mu + rho * (1.0 - mu))).epsilon(1e-9));
  CHECK(jt(1, 1) == doctest::Approx(-2.0 * p.l2 * (mu + zeta * (1.0 - mu))).epsilon(1e-9));
  CHECK(jt(2, 2) ==
        doctest::Approx(2.0 * (p.l3 * mu + rho * p.l1 * (1.0 - mu))).epsilon(1e-9));
  // Direct evaluation of the third entry at the printed spectrum: negative.
  CHECK(jt(2, 2) == doctest::Approx(-2.075315).epsilon(1e-6));
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj)
      if (i != jj) CHECK(std::abs(jt(i, jj)) < 1e-12);
}

TEST_CASE("geometric Lorenz Jacobian modes: full matches finite differences") {
  flow::GeometricLorenzParams family;
  const auto family_model = flow::GeometricLorenzModel(family).model();
  flow::GeometricLorenzParams full = family;
  full.mode = flow::JacobianMode::FullJacobian;
  const auto full_model = flow::GeometricLorenzModel(full).model();

  const std::vector<Vec> pts = {
      {0.3, 0.2, -0.4}, {1.5, 0.3, 0.2}, {-1.4, -0.2, 0.5}, {3.2, 0.1, -0.3}};
  CHECK(flow::jacobian_residual(full_model, pts) < 1e-6);

  // Matrix-family mode drops the blend-gradient term, so it deviates from
  // finite differences inside the transition but nowhere else.
  CHECK(flow::jacobian_residual(family_model, {{0.3, 0.2, -0.4}, {3.2, 0.1, -0.3}}) < 1e-6);
  CHECK(flow::jacobian_residual(family_model, {{1.5, 0.3, 0.2}}) > 1e-4);

  // Velocity is continuous across both interfaces.
  for (double x0 : {1.0, 2.0}) {
    const Vec a = family_model.velocity({x0 - 1e-9, 0.4, -0.2});
    const Vec b = family_model.velocity({x0 + 1e-9, 0.4, -0.2});
    CHECK(matcore::norm(matcore::sub(a, b)) < 1e-6);
  }

  CHECK_THROWS_AS(family_model.velocity({50.0, 0.0, 0.0}), std::domain_error);
}

TEST_CASE("integrate: T = 0, truncation, step-size guard") {
  const auto m = flow::model_linear_saddle(1.0, -3.0, -0.5);
  const auto still = flow::integrate(m, {0.5, 0.5, 0.5}, 0.0, 1e-2, /*with_wedge=*/true);
  CHECK(still.size() == 1);
  CHECK((still.fundamentals[0] - SquareMatrix::identity(3)).max_abs() == 0.0);
  CHECK((still.wedge_fundamentals[0] - SquareMatrix::identity(3)).max_abs() == 0.0);

  const auto sp = oracles::lorenz_origin();
  const auto fast = flow::model_linear_saddle(sp.l1, sp.l2, sp.l3);
  const auto escaped = flow::integrate(fast, {5.0, 0.0, 0.0}, 1.0, 1e-3);
  CHECK(escaped.truncated);
  CHECK(escaped.exit_index > 0);
  CHECK(escaped.duration() < 0.1);
  CHECK(fast.region.contains(escaped.states.back()));

  const auto lorenz = flow::model_classic_lorenz(10.0, 28.0, 8.0 / 3.0);
  CHECK_THROWS_AS(flow::integrate(lorenz, {2.2, 2.3, 15.1}, 2.0, 0.02), std::runtime_error);
}

TEST_CASE("integrate: wedge cocycle equals the compound of the fundamental") {
  const auto lorenz = flow::model_classic_lorenz(10.0, 28.0, 8.0 / 3.0);
  const auto orbit = flow::integrate(lorenz, {1.0, 1.0, 1.0}, 2.0, 1e-3, /*with_wedge=*/true);
  const SquareMatrix h = exterior::hodge3_basis_change();
  const SquareMatrix expected = h * exterior::compound(orbit.fundamentals.back(), 2) * h;
  const SquareMatrix got = orbit.wedge_fundamentals.back();
  CHECK((got - expected).max_abs() < 1e-6 * (1.0 + expected.max_abs()));
}

TEST_CASE("integrate: Liouville identity and cocycle re-basing") {
  const auto lorenz = flow::model_classic_lorenz(10.0, 28.0, 8.0 / 3.0);
  const auto orbit = flow::integrate(lorenz, {1.0, 1.0, 1.0}, 4.0, 2.5e-4);

  std::vector<double> traces;
  for (const Vec& x : orbit.states) traces.push_back(lorenz.jacobian(x).trace());
  double integral = 0.0;
  for (std::size_t i = 1; i < orbit.size(); ++i)
    integral += 0.5 * (orbit.times[i] - orbit.times[i - 1]) * (traces[i] + traces[i - 1]);
  CHECK(std::abs(orbit.log_det.back() - integral) < 1e-5 * (1.0 + std::abs(integral)));
  // On a short window the assembled product is still well conditioned and
  // its determinant agrees with the accumulated value.
  const std::size_t early = orbit.size() / 8;
  CHECK(std::log(matcore::det(orbit.fundamentals[early])) ==
        doctest::Approx(orbit.log_det[early]).epsilon(1e-8));

  const std::size_t mid = orbit.size() / 2;
  const auto tail = flow::integrate(lorenz, orbit.states[mid],
                                    orbit.times.back() - orbit.times[mid], 2.5e-4);
  const SquareMatrix rebased = tail.fundamentals.back() * orbit.fundamentals[mid];
  CHECK((rebased - orbit.fundamentals.back()).max_abs() <
        1e-6 * orbit.fundamentals.back().max_abs());
}

TEST_CASE("RK4 order: halving the step cuts the state error ~16x") {
  const auto m = flow::model_linear_saddle(1.0, -3.0, -0.5);
  const Vec x0{0.01, 1.0, 1.0};
  const auto exact = [&](double t) {
    return Vec{0.01 * std::exp(t), std::exp(-3.0 * t), std::exp(-0.5 * t)};
  };
  const auto err = [&](double h) {
    const auto orbit = flow::integrate(m, x0, 2.0, h);
    return matcore::norm(matcore::sub(orbit.states.back(), exact(2.0)));
  };
  const double ratio = err(0.02) / err(0.01);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("orbit CSV export carries the documented header") {
  const auto m = flow::model_linear_saddle(1.0, -3.0, -0.5);
  const auto orbit = flow::integrate(m, {0.0, 0.0, 0.0}, 0.01, 1e-2, /*with_wedge=*/true);
  std::ostringstream out;
  flow::orbit_to_csv(orbit, out);
  const std::string text = out.str();
  CHECK(text.rfind("t,x1,x2,x3,phi11,phi12,phi13,phi21,phi22,phi23,phi31,phi32,phi33,w11", 0) ==
        0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + two rows
}

TEST_CASE("models build from key-value configuration") {
  const auto cfg = kv::Config::parse_string(
      "model = saddle\nspectrum = 1 -3 -0.5\n", "test.job");
  const auto m = flow::model_from_config(cfg);
  CHECK(m.name == "linear_saddle");

  const auto geom_cfg = kv::Config::parse_string(
      "model = geomlorenz\nrho = 0.1\nzeta = 0.2\nmode = full-jacobian\n", "test.job");
  CHECK(flow::model_from_config(geom_cfg).name == "geometric_lorenz");

  CHECK_THROWS_AS(
      flow::model_from_config(kv::Config::parse_string("model = nope\n", "test.job")),
      std::runtime_error);
  CHECK_THROWS_AS(flow::model_from_config(kv::Config::parse_string(
                      "model = saddle\nspectrum = 1 -0.5 -3\n", "test.job")),
                  std::invalid_argument);
}
