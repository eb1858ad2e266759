// Acceptance suite: one pass/fail line per criterion, each run against its
// runtime budget. Exit code 0 only when every criterion passes.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hypercone/selftest.hpp"

namespace {

struct Criterion {
  std::string label;
  double budget_seconds;
  std::function<hypercone::selftest::Rows()> run;
};

}  // namespace

int main() {
  using hypercone::selftest::Rows;
  namespace st = hypercone::selftest;

  const std::vector<Criterion> criteria = {
      {"1 delta-interval fixtures", 1.0, [] { return st::criterion1_delta_fixtures(); }},
      {"2 delta2 identity + wedge generator", 5.0, [] { return st::criterion2_delta2_identity(); }},
      {"3 Cauchy-Binet + generator consistency", 10.0, [] { return st::criterion3_cauchy_binet(); }},
      {"4 linear-saddle rates + adapted metric", 5.0, [] { return st::criterion4_saddle_rates(); }},
      {"5 geometric Lorenz certificate", 30.0, [] { return st::criterion5_geometric_lorenz(); }},
      {"6 induced-biform mixed signature", 1.0, [] { return st::criterion6_biform_signature(); }},
      {"7 exterior-power domination crosscheck", 60.0, [] { return st::criterion7_theoremA(); }},
      {"8 property suite", 60.0, [] { return st::criterion8_properties(); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Rows rows;
    std::string error;
    try {
      rows = c.run();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    bool ok = error.empty() && !rows.empty();
    for (const auto& row : rows) ok = ok && row.pass;
    const bool in_budget = dt < c.budget_seconds;
    ok = ok && in_budget;

    std::printf("[%s] criterion %s (%.2fs / budget %.0fs)\n", ok ? "PASS" : "FAIL",
                c.label.c_str(), dt, c.budget_seconds);
    if (!error.empty()) std::printf("       error: %s\n", error.c_str());
    if (!in_budget) std::printf("       over budget\n");
    for (const auto& row : rows) {
      if (!row.pass) {
        std::printf("       FAIL %s: expected %.12g got %.12g (tol %.2g)\n", row.name.c_str(),
                    row.expected, row.got, row.tol);
      }
    }
    if (!ok) ++failures;
  }

  // Criterion 9: the selftest report is byte-identical across runs.
  {
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream a, b;
    const int ra = st::run(a, {});
    const int rb = st::run(b, {});
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = ra == 0 && rb == 0 && a.str() == b.str();
    std::printf("[%s] criterion 9 selftest determinism (%.2fs)\n", ok ? "PASS" : "FAIL", dt);
    if (!ok) ++failures;
  }

  std::printf("acceptance: %d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
