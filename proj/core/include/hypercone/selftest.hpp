#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hypercone::selftest {

struct Check {
  std::string name;
  double expected = 0.0;
  double got = 0.0;
  double tol = 0.0;
  bool pass = false;
};

using Rows = std::vector<Check>;

Check make_check(std::string name, double expected, double got, double tol);
Check make_flag(std::string name, bool ok);

/// The eight numeric acceptance batteries. `perturb` on the first battery is
/// a test hook that scales one expected value to force a failure.
Rows criterion1_delta_fixtures(double perturb = 0.0);
Rows criterion2_delta2_identity();
Rows criterion3_cauchy_binet();
Rows criterion4_saddle_rates();
Rows criterion5_geometric_lorenz();
Rows criterion6_biform_signature();
Rows criterion7_theoremA();
Rows criterion8_properties();

struct Options {
  double perturb = 0.0;
};

/// Runs every battery and prints a fixed-format check/expected/got/tolerance
/// table. Output is deterministic byte for byte. Returns 0 when every check
/// passes, 1 otherwise.
int run(std::ostream& out, const Options& opts = Options{});

}  // namespace hypercone::selftest
