#include <cmath>
#include <random>

#include "doctest.h"
#include "hypercone/exterior.hpp"
#include "hypercone/forms.hpp"
#include "oracles.hpp"

using namespace hypercone;
using matcore::SquareMatrix;
using matcore::Vec;

namespace {

forms::QuadraticForm lorenz_form() {
  return forms::QuadraticForm(SquareMatrix::diagonal({1.0, -1.0, 1.0}));
}

SquareMatrix lobe_matrix(double rho, double zeta, double l1, double l2) {
  return SquareMatrix(3, {rho * l1, 0.0, 1.0,   //
                          0.0, zeta * l2, 0.0,  //
                          -1.0, 0.0, rho * l1});
}

SquareMatrix random_matrix(std::mt19937_64& rng, std::size_t n, double lim) {
  std::uniform_real_distribution<double> u(-lim, lim);
  SquareMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
  return a;
}

}  // namespace

TEST_CASE("jprime: diagonal fixture and lobe rotation cancellation") {
  const auto j = lorenz_form();
  const SquareMatrix d = SquareMatrix::diagonal({1.0, -3.0, -0.5});
  const SquareMatrix jt = forms::jprime(j, d);
  CHECK(jt(0, 0) == doctest::Approx(2.0));
  CHECK(jt(1, 1) == doctest::Approx(6.0));    // -2 l2
  CHECK(jt(2, 2) == doctest::Approx(-1.0));   // 2 l3
  CHECK((jt - jt.transpose()).max_abs() == 0.0);

  const auto sp = oracles::lorenz_origin();
  const SquareMatrix lobe = lobe_matrix(0.05, 0.05, sp.l1, sp.l2);
  const SquareMatrix jl = forms::jprime(j, lobe);
  CHECK(jl(0, 0) == doctest::Approx(2.0 * 0.05 * sp.l1));
  CHECK(jl(1, 1) == doctest::Approx(-2.0 * 0.05 * sp.l2));
  CHECK(jl(2, 2) == doctest::Approx(2.0 * 0.05 * sp.l1));
  // The rotation block cancels exactly.
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj)
      if (i != jj) CHECK(jl(i, jj) == 0.0);

  CHECK(forms::jprime(j, SquareMatrix(3)).max_abs() == 0.0);
}

TEST_CASE("jprime is linear and symmetric") {
  std::mt19937_64 rng(31);
  const auto j = lorenz_form();
  for (int trial = 0; trial < 10; ++trial) {
    const SquareMatrix a = random_matrix(rng, 3, 2.0);
    const SquareMatrix b = random_matrix(rng, 3, 2.0);
    const SquareMatrix lhs = forms::jprime(j, a + b);
    const SquareMatrix rhs = forms::jprime(j, a) + forms::jprime(j, b);
    CHECK((lhs - rhs).max_abs() < 1e-14);
    const SquareMatrix m = forms::jprime(j, a);
    CHECK((m - m.transpose()).max_abs() == 0.0);
  }
}

TEST_CASE("delta_interval: diagonal closed form") {
  const auto j = lorenz_form();

  const auto iv = forms::delta_interval(j, SquareMatrix::diagonal({1.0, -3.0, -0.5}));
  REQUIRE(iv.has_value());
  CHECK(iv->lo == doctest::Approx(-6.0).epsilon(1e-9));
  CHECK(iv->hi == doctest::Approx(-1.0).epsilon(1e-9));

  // Brute-force margin scan confirms the same feasible set.
  const SquareMatrix jp = forms::jprime(j, SquareMatrix::diagonal({1.0, -3.0, -0.5}));
  const auto margin = [&](double d) {
    return matcore::sym_eig_min(jp - j.matrix() * d);
  };
  const auto [lo, hi] = oracles::scan_feasible(margin, -20.0, 20.0, 40000);
  CHECK(std::abs(lo - iv->lo) < 2e-3);
  CHECK(std::abs(hi - iv->hi) < 2e-3);

  const auto sp = oracles::lorenz_origin();
  const auto iv2 = forms::delta_interval(j, SquareMatrix::diagonal({sp.l1, sp.l2, sp.l3}));
  REQUIRE(iv2.has_value());
  CHECK(iv2->lo == doctest::Approx(2.0 * sp.l2).epsilon(1e-6));
  CHECK(iv2->hi == doctest::Approx(2.0 * sp.l3).epsilon(1e-6));
}

TEST_CASE("delta_interval: empty set is an answer, not an error") {
  const auto j = lorenz_form();
  CHECK_FALSE(forms::delta_interval(j, SquareMatrix(3)).has_value());
}

TEST_CASE("delta_interval concavity of the pencil margin") {
  std::mt19937_64 rng(32);
  const auto j = lorenz_form();
  for (int trial = 0; trial < 10; ++trial) {
    const SquareMatrix d = random_matrix(rng, 3, 2.0);
    const SquareMatrix jp = forms::jprime(j, d);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int probe = 0; probe < 20; ++probe) {
      double d1 = u(rng), d3 = u(rng);
      if (d1 > d3) std::swap(d1, d3);
      const double d2 = 0.5 * (d1 + d3);
      const auto margin = [&](double x) {
        return matcore::sym_eig_min(jp - j.matrix() * x);
      };
      CHECK(margin(d2) >= std::min(margin(d1), margin(d3)) - 1e-12);
    }
  }
}

TEST_CASE("wedge_generator forms") {
  CHECK((forms::wedge_generator(SquareMatrix::identity(3)) - SquareMatrix::identity(3) * 2.0)
            .max_abs() == 0.0);

  const SquareMatrix d = SquareMatrix::diagonal({1.0, -3.0, -0.5});
  const SquareMatrix g = forms::wedge_generator(d);
  CHECK(g(0, 0) == doctest::Approx(-3.5));
  CHECK(g(1, 1) == doctest::Approx(0.5));
  CHECK(g(2, 2) == doctest::Approx(-2.0));

  std::mt19937_64 rng(33);
  const SquareMatrix h = exterior::hodge3_basis_change();
  for (int trial = 0; trial < 20; ++trial) {
    const SquareMatrix a = random_matrix(rng, 3, 2.0);
    const SquareMatrix viaHodge = forms::wedge_generator(a);
    const SquareMatrix viaLex = h * exterior::additive_compound(a, 2) * h;
    CHECK((viaHodge - viaLex).max_abs() < 1e-12);
  }

  // n = 4 delegates to the lexicographic additive compound.
  const SquareMatrix a4 = random_matrix(rng, 4, 1.0);
  CHECK((forms::wedge_generator(a4) - exterior::additive_compound(a4, 2)).max_abs() == 0.0);
}

TEST_CASE("wedge_separation fixtures and hypothesis enforcement") {
  const auto j = lorenz_form();

  const auto ws = forms::wedge_separation(j, SquareMatrix::diagonal({1.0, -3.0, -0.5}));
  REQUIRE(ws.delta2.has_value());
  CHECK(ws.delta2->lo == doctest::Approx(-4.0).epsilon(1e-8));  // 2(l1+l2)
  CHECK(ws.delta2->hi == doctest::Approx(1.0).epsilon(1e-8));   // 2(l1+l3)
  CHECK(ws.criterion2);  // delta2 = 0 lies inside (-4, 1)

  // Not sectionally expanding (l1 + l3 < 0): delta2 = 0 infeasible.
  const auto ws_neg = forms::wedge_separation(j, SquareMatrix::diagonal({1.0, -3.0, -2.0}));
  REQUIRE(ws_neg.delta2.has_value());
  CHECK(ws_neg.delta2->hi == doctest::Approx(-2.0).epsilon(1e-8));
  CHECK_FALSE(ws_neg.criterion2);

  const auto sp = oracles::lorenz_origin();
  const auto ws2 =
      forms::wedge_separation(j, SquareMatrix::diagonal({sp.l1, sp.l2, sp.l3}));
  REQUIRE(ws2.delta2.has_value());
  CHECK(ws2.delta2->lo == doctest::Approx(2.0 * (sp.l1 + sp.l2)).epsilon(1e-6));
  CHECK(ws2.delta2->hi == doctest::Approx(2.0 * (sp.l1 + sp.l3)).epsilon(1e-6));
  CHECK(ws2.delta2->hi > 0.0);  // the Lorenz-like condition l1 + l3 > 0

  // Lobe matrix: J' positive definite, the zero-delta2 criterion holds.
  const SquareMatrix lobe = lobe_matrix(0.05, 0.05, sp.l1, sp.l2);
  const auto wsl = forms::wedge_separation(j, lobe);
  CHECK(wsl.criterion2);
  REQUIRE(wsl.delta2.has_value());
  const double trace2 = 2.0 * lobe.trace();
  const auto base = forms::delta_interval(j, lobe);
  REQUIRE(base.has_value());
  // Near the lower delta endpoint, delta2 = 2 tr - delta sits near its upper
  // endpoint and is positive.
  CHECK(trace2 - base->lo == doctest::Approx(wsl.delta2->hi).epsilon(1e-8));
  CHECK(wsl.delta2->hi > 0.0);

  // Hypothesis violations are hard errors.
  const forms::QuadraticForm j4(SquareMatrix::diagonal({1.0, -1.0, 1.0, 1.0}));
  CHECK_THROWS_AS(forms::wedge_separation(j4, SquareMatrix::identity(4)),
                  std::invalid_argument);
  const forms::QuadraticForm q2(SquareMatrix::diagonal({-1.0, -1.0, 1.0}));
  CHECK_THROWS_AS(forms::wedge_separation(q2, SquareMatrix::identity(3)),
                  std::invalid_argument);
}

TEST_CASE("separation_witness verdicts") {
  const auto j = lorenz_form();
  const SquareMatrix d = SquareMatrix::diagonal({1.0, -3.0, -0.5});

  const auto inside = forms::separation_witness(j, d, -3.0);
  CHECK(inside.ok);
  CHECK(inside.margin > 0.0);

  const auto at_zero = forms::separation_witness(j, d, 0.0);
  CHECK_FALSE(at_zero.ok);
  CHECK(at_zero.margin == doctest::Approx(-1.0));  // 2 l3

  // Zero generator: no strict separation for any delta.
  for (double delta : {-2.0, -0.5, 0.0, 0.7}) {
    CHECK_FALSE(forms::separation_witness(j, SquareMatrix(3), delta).ok);
  }
}

TEST_CASE("certificate flags are consistent with the intervals") {
  const auto j = lorenz_form();
  const auto sp = oracles::lorenz_origin();
  const auto cert = forms::certify_point(j, SquareMatrix::diagonal({sp.l1, sp.l2, sp.l3}),
                                         {0.0, 0.0, 0.0}, true);
  CHECK(cert.verdicts.strictly_separated);
  CHECK(cert.verdicts.wedge_separated);
  CHECK(cert.verdicts.delta_negative_feasible);
  CHECK(cert.verdicts.delta2_positive_feasible);
  REQUIRE(cert.delta.has_value());
  REQUIRE(cert.delta2.has_value());
  CHECK(cert.trace2 == doctest::Approx(2.0 * (sp.l1 + sp.l2 + sp.l3)));
  CHECK(cert.delta2->lo == doctest::Approx(cert.trace2 - cert.delta->hi).epsilon(1e-8));
  CHECK(cert.delta2->hi == doctest::Approx(cert.trace2 - cert.delta->lo).epsilon(1e-8));

  const auto empty = forms::certify_point(j, SquareMatrix(3), {0.0, 0.0, 0.0}, true);
  CHECK_FALSE(empty.verdicts.strictly_separated);
  CHECK_FALSE(empty.verdicts.wedge_separated);
}

TEST_CASE("delta selection rules") {
  const auto j = lorenz_form();
  const SquareMatrix d = SquareMatrix::diagonal({1.0, -3.0, -0.5});
  const auto iv = forms::delta_interval(j, d);
  REQUIRE(iv.has_value());

  const auto mid = forms::select_delta(j, d, iv, forms::DeltaRule::Midpoint);
  CHECK(*mid == doctest::Approx(-3.5).epsilon(1e-8));

  const auto lo = forms::select_delta(j, d, iv, forms::DeltaRule::NearLo);
  CHECK(*lo == doctest::Approx(-6.0 + 1e-3 * 5.0).epsilon(1e-6));

  // Max-margin sits where the two binding eigenvalue lines cross:
  // 2 l3 - delta = -2 l2 + delta -> delta = l2 + l3.
  const auto mm = forms::select_delta(j, d, iv, forms::DeltaRule::MaxMargin);
  CHECK(*mm == doctest::Approx(-3.5).epsilon(1e-6));
  CHECK(forms::separation_witness(j, d, *mm).ok);

  CHECK_FALSE(forms::select_delta(j, d, std::nullopt, forms::DeltaRule::Midpoint).has_value());

  CHECK(forms::delta_rule_from_string("near-lo") == forms::DeltaRule::NearLo);
  CHECK_THROWS_AS(forms::delta_rule_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("reversal symmetry of the feasible interval") {
  std::mt19937_64 rng(34);
  const auto j = lorenz_form();
  int nonempty = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const SquareMatrix d = random_matrix(rng, 3, 2.0);
    const auto fwd = forms::delta_interval(j, d);
    const auto rev = forms::delta_interval(j.negated(), d * -1.0);
    REQUIRE(fwd.has_value() == rev.has_value());
    if (fwd) {
      ++nonempty;
      CHECK(rev->lo == doctest::Approx(-fwd->hi).epsilon(1e-7));
      CHECK(rev->hi == doctest::Approx(-fwd->lo).epsilon(1e-7));
    }
  }
  // The structured diagonal case keeps the check non-vacuous.
  const auto fwd = forms::delta_interval(j, SquareMatrix::diagonal({1.0, -3.0, -0.5}));
  const auto rev =
      forms::delta_interval(j.negated(), SquareMatrix::diagonal({-1.0, 3.0, 0.5}));
  REQUIRE((fwd && rev));
  CHECK(rev->lo == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rev->hi == doctest::Approx(6.0).epsilon(1e-8));
}

TEST_CASE("cone quotient bounds straddle the interval endpoints (diagnostic)") {
  const auto j = lorenz_form();
  const SquareMatrix d = SquareMatrix::diagonal({1.0, -3.0, -0.5});
  const auto iv = forms::delta_interval(j, d);
  REQUIRE(iv.has_value());
  const auto bounds = forms::cone_quotient_bounds(j, d);
  // Sampled sup over the negative cone approaches the lower endpoint from
  // below, the sampled inf over the positive cone the upper endpoint from
  // above. Recorded, not asserted tightly.
  CHECK(bounds.sup_negative <= iv->lo + 1e-6);
  CHECK(bounds.inf_positive >= iv->hi - 1e-6);
  MESSAGE("cone quotient diagnostic: sup_C- = ", bounds.sup_negative,
          ", inf_C+ = ", bounds.inf_positive, ", interval = (", iv->lo, ", ", iv->hi, ")");
}
