#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hypercone/domination.hpp"
#include "hypercone/flow.hpp"
#include "hypercone/forms.hpp"
#include "hypercone/kvconfig.hpp"

namespace hypercone::certify {

using flow::VectorFieldModel;
using matcore::Vec;

enum class SamplingKind { Grid, Regions, Orbits };

struct SamplingSpec {
  SamplingKind kind = SamplingKind::Grid;
  // Grid
  flow::Box grid_box;
  long grid_res = 5;
  // Regions (geometric Lorenz): per-region grids plus a blend sweep hitting
  // mu = i / (mu_steps - 1) exactly via the inverse blend profile.
  long linear_res = 3;
  long lobe_res = 3;
  long mu_steps = 101;
  // Orbits
  std::vector<Vec> seeds;
  double horizon = 10.0;
  double step = 1e-3;
};

/// A fully resolved certification job: model, sampling, form, checks
/// (dependency-closed), selection rule and output options.
struct CertifyJob {
  std::string model_name;
  VectorFieldModel model;
  std::optional<flow::GeometricLorenzModel> geom;  // set when model is geomlorenz
  SamplingSpec sampling;
  std::optional<forms::QuadraticForm> form;
  std::set<std::string> checks;  // separation, wedge, trichotomy, rates, metric, theoremA
  forms::DeltaRule rule = forms::DeltaRule::Midpoint;
  std::string out_path;
  int threads = 1;
  long contracted_dim = 1;  // s for splitting-based checks
};

/// Parses and validates a job configuration; applies dependency closure to
/// the requested checks. Throws std::runtime_error with source:line context
/// on malformed input.
CertifyJob parse_job(const kv::Config& cfg);

struct SampleRecord {
  Vec point;
  std::string region;
  std::optional<forms::Interval> delta;
  double trace2 = 0.0;
  std::optional<forms::Interval> delta2;
  bool criterion2 = false;
  std::optional<double> delta_selected;
  std::optional<double> delta2_selected;
  forms::CertificateVerdicts verdicts;
  std::string error;  // per-point hypothesis violation, empty if none
};

struct CertifySummary {
  bool all_separated = false;
  bool all_wedge_separated = false;
  bool all_delta2_selected_positive = false;
  std::optional<forms::Interval> uniform_delta_band;   // intersection, all samples
  std::optional<forms::Interval> uniform_delta2_band;  // intersection, all samples
  std::map<std::string, forms::Interval> region_delta_bands;  // nonempty per-region bands
  std::size_t sample_count = 0;
  std::size_t error_count = 0;
};

struct CertifyOutcome {
  int exit_code = 0;  // 0 pass, 2 verified-negative
  bool verdict = false;
  CertifySummary summary;
  std::vector<SampleRecord> samples;
  std::string certificate_json;  // schema hypercone-cert/1
};

CertifyOutcome run_certify(const CertifyJob& job);

struct OrbitRunResult {
  Vec seed;
  bool truncated = false;
  std::string csv;  // t, state..., delta, delta2, running Delta
  double delta_area_feasible = 0.0;
  double feasible_until = 0.0;  // time of the last point with a certificate
  std::optional<domination::DominationReport> domination;
  std::optional<domination::DominationReport> sectional;
};

struct OrbitOutcome {
  int exit_code = 0;
  std::vector<OrbitRunResult> orbits;
  std::string report_json;
};

/// Integrates each seed, writes the per-point certificate columns and running
/// delta integral, and fits the rate reports. Region exit truncates the
/// trace and is recorded, not fatal.
OrbitOutcome run_orbit(const CertifyJob& job);

}  // namespace hypercone::certify
