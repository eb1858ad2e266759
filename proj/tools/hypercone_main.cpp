#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hypercone/certify.hpp"
#include "hypercone/flow.hpp"
#include "hypercone/kvconfig.hpp"
#include "hypercone/selftest.hpp"

namespace {

struct CommonArgs {
  std::string job_path;
  std::string out_path;
  int threads = 0;          // 0: keep job value
  std::string delta_rule;   // empty: keep job value
  std::string mode;         // empty: keep job value
};

hypercone::certify::CertifyJob load_job(const CommonArgs& args) {
  hypercone::kv::Config cfg = hypercone::kv::Config::parse_file(args.job_path);
  std::map<std::string, std::string> values = cfg.values();
  if (!args.out_path.empty()) values["out"] = args.out_path;
  if (args.threads > 0) values["threads"] = std::to_string(args.threads);
  if (!args.delta_rule.empty()) values["delta_rule"] = args.delta_rule;
  if (!args.mode.empty()) values["mode"] = args.mode;
  return hypercone::certify::parse_job(
      hypercone::kv::Config::from_values(std::move(values), args.job_path));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypercone: separation certificates and domination rates for vector fields"};
  app.require_subcommand(1);

  CommonArgs args;
  double perturb = 0.0;

  CLI::App* certify = app.add_subcommand("certify", "grid/region separation certificates");
  certify->add_option("--job", args.job_path, "job file (key = value)")->required();
  certify->add_option("--out", args.out_path, "certificate output path");
  certify->add_option("--threads", args.threads, "worker threads");
  certify->add_option("--delta-rule", args.delta_rule, "midpoint|max-margin|near-lo");
  certify->add_option("--mode", args.mode, "matrix-family|full-jacobian");

  bool with_phi = false;
  CLI::App* orbit = app.add_subcommand("orbit", "orbit traces with certificate columns");
  orbit->add_option("--job", args.job_path, "job file (key = value)")->required();
  orbit->add_option("--out", args.out_path, "output base path");
  orbit->add_option("--threads", args.threads, "worker threads");
  orbit->add_option("--delta-rule", args.delta_rule, "midpoint|max-margin|near-lo");
  orbit->add_option("--mode", args.mode, "matrix-family|full-jacobian");
  orbit->add_flag("--with-phi", with_phi,
                  "also write fundamental-matrix traces (t,x...,phi11..,[w11..])");

  CLI::App* selftest = app.add_subcommand("selftest", "run the acceptance checks");
  selftest->add_option("--perturb", perturb, "test hook: skew one expected value")
      ->group("");  // hidden

  CLI11_PARSE(app, argc, argv);

  try {
    if (certify->parsed()) {
      const auto job = load_job(args);
      const auto outcome = hypercone::certify::run_certify(job);
      const std::string path = job.out_path.empty() ? "certificate.json" : job.out_path;
      write_file(path, outcome.certificate_json);
      std::cout << (outcome.verdict ? "PASS" : "NEGATIVE") << " (" << outcome.summary.sample_count
                << " samples, " << outcome.summary.error_count << " errors) -> " << path << "\n";
      return outcome.exit_code;
    }
    if (orbit->parsed()) {
      const auto job = load_job(args);
      const auto outcome = hypercone::certify::run_orbit(job);
      const std::string base = job.out_path.empty() ? "orbit" : job.out_path;
      for (std::size_t i = 0; i < outcome.orbits.size(); ++i) {
        write_file(base + "_" + std::to_string(i + 1) + ".csv", outcome.orbits[i].csv);
      }
      if (with_phi) {
        for (std::size_t i = 0; i < job.sampling.seeds.size(); ++i) {
          const auto segment = hypercone::flow::integrate(
              job.model, job.sampling.seeds[i], job.sampling.horizon, job.sampling.step,
              /*with_wedge=*/true);
          std::ostringstream csv;
          hypercone::flow::orbit_to_csv(segment, csv);
          write_file(base + "_phi_" + std::to_string(i + 1) + ".csv", csv.str());
        }
      }
      write_file(base + ".json", outcome.report_json);
      std::cout << outcome.orbits.size() << " orbit(s) -> " << base << "_*.csv, " << base
                << ".json\n";
      return outcome.exit_code;
    }
    hypercone::selftest::Options opts;
    opts.perturb = perturb;
    return hypercone::selftest::run(std::cout, opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
