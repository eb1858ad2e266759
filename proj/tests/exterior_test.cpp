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

SquareMatrix random_matrix(std::mt19937_64& rng, std::size_t n, double lim) {
  std::uniform_real_distribution<double> u(-lim, lim);
  SquareMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
  return a;
}

}  // namespace

TEST_CASE("compound indexing is lexicographic with C(n,k) subsets") {
  const exterior::CompoundIndexing idx(4, 2);
  REQUIRE(idx.size() == 6);
  CHECK(idx.basis[0] == std::vector<int>{0, 1});
  CHECK(idx.basis[1] == std::vector<int>{0, 2});
  CHECK(idx.basis[2] == std::vector<int>{0, 3});
  CHECK(idx.basis[3] == std::vector<int>{1, 2});
  CHECK(idx.basis[4] == std::vector<int>{1, 3});
  CHECK(idx.basis[5] == std::vector<int>{2, 3});
  for (std::size_t r = 0; r < idx.size(); ++r) CHECK(idx.index_of(idx.basis[r]) == r);

  CHECK(exterior::CompoundIndexing(5, 3).size() == 10);
  CHECK_THROWS_AS(exterior::CompoundIndexing(3, 4), std::out_of_range);
}

TEST_CASE("compound identity and diagonal cases") {
  const SquareMatrix c = exterior::compound(SquareMatrix::identity(4), 2);
  CHECK((c - SquareMatrix::identity(6)).max_abs() == 0.0);

  const SquareMatrix d = exterior::compound(SquareMatrix::diagonal({2.0, 3.0, 5.0}), 2);
  CHECK(d(0, 0) == doctest::Approx(6.0));   // (12)
  CHECK(d(1, 1) == doctest::Approx(10.0));  // (13)
  CHECK(d(2, 2) == doctest::Approx(15.0));  // (23)
  CHECK(d.max_abs() == doctest::Approx(15.0));
}

TEST_CASE("compound is multiplicative (brute-force minor oracle)") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 4;
    const std::size_t k = 2;
    const SquareMatrix a = random_matrix(rng, n, 1.0);
    const SquareMatrix b = random_matrix(rng, n, 1.0);
    const exterior::CompoundIndexing idx(n, k);
    // The oracle builds both compounds by Laplace expansion, independently.
    const SquareMatrix oa = oracles::brute_compound(a, idx.basis);
    const SquareMatrix ob = oracles::brute_compound(b, idx.basis);
    const SquareMatrix oab = oracles::brute_compound(a * b, idx.basis);
    CHECK((exterior::compound(a, k) - oa).max_abs() < 1e-12);
    CHECK((oab - oa * ob).max_abs() < 1e-9);
    CHECK((exterior::compound(a * b, k) - exterior::compound(a, k) * exterior::compound(b, k))
              .max_abs() < 1e-9);
  }
}

TEST_CASE("compound trivial fast paths") {
  std::mt19937_64 rng(22);
  const SquareMatrix a = random_matrix(rng, 3, 1.0);
  CHECK((exterior::compound(a, 1) - a).max_abs() == 0.0);
  CHECK(exterior::compound(a, 3)(0, 0) == doctest::Approx(matcore::det(a)).epsilon(1e-12));
  CHECK_THROWS_AS(exterior::compound(a, 4), std::out_of_range);
  CHECK_THROWS_AS(exterior::compound(a, 0), std::out_of_range);
}

TEST_CASE("additive compound: diagonal, zero, generator consistency") {
  const SquareMatrix d =
      exterior::additive_compound(SquareMatrix::diagonal({1.0, 2.0, 4.0}), 2);
  CHECK(d(0, 0) == doctest::Approx(3.0));  // 1+2
  CHECK(d(1, 1) == doctest::Approx(5.0));  // 1+4
  CHECK(d(2, 2) == doctest::Approx(6.0));  // 2+4
  double offdiag = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) offdiag = std::max(offdiag, std::abs(d(i, j)));
  CHECK(offdiag == 0.0);

  CHECK(exterior::additive_compound(SquareMatrix(4), 2).max_abs() == 0.0);

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const SquareMatrix a = random_matrix(rng, 3, 1.0);
    const SquareMatrix lhs = exterior::compound(matcore::expm(a, 0.7), 2);
    const SquareMatrix rhs = matcore::expm(exterior::additive_compound(a, 2), 0.7);
    CHECK((lhs - rhs).max_abs() < 1e-8);
  }
}

TEST_CASE("additive compound eigenvalue-sum law") {
  // Diagonal case: spectrum is exactly the pairwise sums.
  const Vec lambda{0.3, -1.2, 2.5, -0.4};
  const SquareMatrix d = SquareMatrix::diagonal(lambda);
  std::mt19937_64 rng(24);
  SquareMatrix p = random_matrix(rng, 4, 1.0);
  // Keep the conjugation well-conditioned.
  p += SquareMatrix::identity(4) * 3.0;

  const exterior::CompoundIndexing idx(4, 2);
  std::vector<double> sums;
  for (const auto& subset : idx.basis) sums.push_back(lambda[subset[0]] + lambda[subset[1]]);
  std::sort(sums.begin(), sums.end());

  const auto check_spectrum = [&](const SquareMatrix& m) {
    // The additive compound here is diagonalizable with real spectrum;
    // compare against the sums via the symmetrized similarity trick: the
    // conjugated diagonal has the same characteristic polynomial, so test
    // det(M - s I) at the sum points.
    for (double s : sums) {
      SquareMatrix shifted = m - SquareMatrix::identity(6) * s;
      CHECK(std::abs(matcore::det(shifted)) < 1e-9 * std::pow(1.0 + m.inf_norm(), 6));
    }
  };
  check_spectrum(exterior::additive_compound(d, 2));

  // Conjugated-diagonal case: A = P D P^-1.
  SquareMatrix pinv(4);
  {
    // Gauss-Jordan inverse for the test fixture.
    SquareMatrix lu = p;
    pinv = SquareMatrix::identity(4);
    for (std::size_t col = 0; col < 4; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < 4; ++r)
        if (std::abs(lu(r, col)) > std::abs(lu(piv, col))) piv = r;
      for (std::size_t j = 0; j < 4; ++j) {
        std::swap(lu(piv, j), lu(col, j));
        std::swap(pinv(piv, j), pinv(col, j));
      }
      const double dpiv = 1.0 / lu(col, col);
      for (std::size_t j = 0; j < 4; ++j) {
        lu(col, j) *= dpiv;
        pinv(col, j) *= dpiv;
      }
      for (std::size_t r = 0; r < 4; ++r) {
        if (r == col) continue;
        const double f = lu(r, col);
        for (std::size_t j = 0; j < 4; ++j) {
          lu(r, j) -= f * lu(col, j);
          pinv(r, j) -= f * pinv(col, j);
        }
      }
    }
  }
  check_spectrum(exterior::additive_compound(p * d * pinv, 2));
}

TEST_CASE("hodge3: cofactor and generator representations") {
  const auto id = exterior::hodge3(SquareMatrix::identity(3));
  CHECK((id.cofactor - SquareMatrix::identity(3)).max_abs() == 0.0);
  CHECK((id.generator3 - SquareMatrix::identity(3) * 2.0).max_abs() == 0.0);

  const auto diag = exterior::hodge3(SquareMatrix::diagonal({1.0, -3.0, -0.5}));
  CHECK(diag.generator3(0, 0) == doctest::Approx(-3.5));  // l2 + l3
  CHECK(diag.generator3(1, 1) == doctest::Approx(0.5));   // l1 + l3
  CHECK(diag.generator3(2, 2) == doctest::Approx(-2.0));  // l1 + l2

  std::mt19937_64 rng(25);
  const SquareMatrix h = exterior::hodge3_basis_change();
  CHECK((h * h - SquareMatrix::identity(3)).max_abs() == 0.0);  // involution
  for (int trial = 0; trial < 25; ++trial) {
    const SquareMatrix a = random_matrix(rng, 3, 2.0);
    const auto r = exterior::hodge3(a);
    const SquareMatrix lex = exterior::compound(a, 2);
    CHECK((h * lex * h - r.cofactor).max_abs() < 1e-10 * (1.0 + lex.max_abs()));
    const SquareMatrix gen_lex = exterior::additive_compound(a, 2);
    CHECK((h * gen_lex * h - r.generator3).max_abs() < 1e-12 * (1.0 + gen_lex.max_abs()));
    // A ^ A = det(A) (A^-1)^T, read through the cofactor matrix: cof(A)^T A
    // = det(A) I even for singular A by continuity of both sides.
    const SquareMatrix prod = r.cofactor.transpose() * a;
    CHECK((prod - SquareMatrix::identity(3) * matcore::det(a)).max_abs() < 1e-10);
  }
  CHECK_THROWS_AS(exterior::hodge3(SquareMatrix::identity(2)), std::invalid_argument);
}

TEST_CASE("induced biform equals compound(J,2) and has the documented signatures") {
  const forms::QuadraticForm j3(SquareMatrix::diagonal({-1.0, 1.0, 1.0}));
  const SquareMatrix b3 = exterior::induced_biform(j3);
  CHECK(b3(0, 0) == doctest::Approx(-1.0));  // (12)
  CHECK(b3(1, 1) == doctest::Approx(-1.0));  // (13)
  CHECK(b3(2, 2) == doctest::Approx(1.0));   // (23)

  const forms::QuadraticForm jid(SquareMatrix::diagonal({1.0, -1.0, 1.0}));
  // Entry-for-entry the same arithmetic as compound(J, 2).
  const SquareMatrix lhs = exterior::induced_biform(jid);
  const SquareMatrix rhs = exterior::compound(jid.matrix(), 2);
  CHECK((lhs - rhs).max_abs() == 0.0);

  const forms::QuadraticForm j4(SquareMatrix::diagonal({-1.0, -1.0, 1.0, 1.0}));
  const SquareMatrix b4 = exterior::induced_biform(j4);
  int pos = 0, neg = 0;
  const auto eig = matcore::sym_eig(b4);
  for (double v : eig.values) (v > 0 ? pos : neg)++;
  CHECK(pos == 2);
  CHECK(neg == 4);

  CHECK_THROWS_AS(forms::QuadraticForm(SquareMatrix::diagonal({1.0, 0.0, -1.0})),
                  std::invalid_argument);
}

TEST_CASE("Sylvester-Franke: det of the 3x3 exterior square is det^2") {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    const SquareMatrix a = random_matrix(rng, 3, 2.0);
    const double lhs = matcore::det(exterior::compound(a, 2));
    const double rhs = matcore::det(a) * matcore::det(a);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}
