#include "hypercone/certify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace hypercone::certify {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownChecks = {"separation", "wedge",  "trichotomy",
                                            "rates",      "metric", "theoremA"};

std::set<std::string> close_checks(std::set<std::string> checks) {
  // Dependency closure: every check implies the data it consumes.
  const std::map<std::string, std::vector<std::string>> deps = {
      {"wedge", {"separation"}},
      {"trichotomy", {"separation"}},
      {"metric", {"separation", "rates"}},
      {"theoremA", {"rates"}},
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [check, needs] : deps) {
      if (!checks.count(check)) continue;
      for (const std::string& need : needs) {
        if (checks.insert(need).second) changed = true;
      }
    }
  }
  return checks;
}

forms::QuadraticForm parse_form(const kv::Config& cfg, const VectorFieldModel& model) {
  const std::string spec = cfg.get_or("form", "default");
  if (spec == "default") {
    if (!model.form) throw std::runtime_error("job: model has no default form; set 'form'");
    return *model.form;
  }
  std::istringstream in(spec);
  std::string kind;
  in >> kind;
  if (kind != "diag") {
    throw std::runtime_error("job: form must be 'default' or 'diag v1 v2 ...'");
  }
  Vec diag;
  double v;
  while (in >> v) diag.push_back(v);
  if (diag.size() != model.dim) {
    throw std::runtime_error("job: form diagonal size does not match model dimension");
  }
  return forms::QuadraticForm(matcore::SquareMatrix::diagonal(diag));
}

struct LabeledPoint {
  Vec point;
  std::string region;
};

std::vector<LabeledPoint> collect_samples(const CertifyJob& job) {
  std::vector<LabeledPoint> pts;
  const auto label = [&](const Vec& x) {
    return job.model.region_label ? job.model.region_label(x) : std::string();
  };
  switch (job.sampling.kind) {
    case SamplingKind::Grid: {
      const flow::Box& box = job.sampling.grid_box;
      const long res = job.sampling.grid_res;
      const std::size_t n = job.model.dim;
      std::vector<long> ix(n, 0);
      while (true) {
        Vec x(n);
        for (std::size_t d = 0; d < n; ++d) {
          x[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * static_cast<double>(ix[d]) /
                                 static_cast<double>(res - 1);
        }
        pts.push_back({x, label(x)});
        std::size_t d = n;
        while (d-- > 0) {
          if (++ix[d] < res) break;
          ix[d] = 0;
          if (d == 0) return pts;
        }
        if (ix == std::vector<long>(n, 0)) break;
      }
      return pts;
    }
    case SamplingKind::Regions: {
      if (!job.geom) throw std::runtime_error("job: sampling 'regions' requires model geomlorenz");
      const auto& geom = *job.geom;
      const auto& p = geom.params();
      const auto grid3 = [&](const Vec& lo, const Vec& hi, long res) {
        for (long i = 0; i < res; ++i)
          for (long jj = 0; jj < res; ++jj)
            for (long kk = 0; kk < res; ++kk) {
              Vec x{lo[0] + (hi[0] - lo[0]) * i / std::max(1.0, res - 1.0),
                    lo[1] + (hi[1] - lo[1]) * jj / std::max(1.0, res - 1.0),
                    lo[2] + (hi[2] - lo[2]) * kk / std::max(1.0, res - 1.0)};
              pts.push_back({x, label(x)});
            }
      };
      const double a = p.linear_half_width;
      grid3({-a, -1.0, -1.0}, {a, 1.0, 1.0}, job.sampling.linear_res);
      grid3(matcore::sub(p.center1, {1.0, 1.0, 1.0}), matcore::add(p.center1, {1.0, 1.0, 1.0}),
            job.sampling.lobe_res);
      grid3(matcore::sub(p.center2, {1.0, 1.0, 1.0}), matcore::add(p.center2, {1.0, 1.0, 1.0}),
            job.sampling.lobe_res);
      for (int side : {+1, -1}) {
        for (long i = 0; i < job.sampling.mu_steps; ++i) {
          const double mu =
              static_cast<double>(i) / static_cast<double>(job.sampling.mu_steps - 1);
          const Vec x{geom.x_for_mu(mu, side), 0.0, 0.0};
          pts.push_back({x, label(x)});
        }
      }
      return pts;
    }
    case SamplingKind::Orbits: {
      for (const Vec& seed : job.sampling.seeds) {
        const flow::OrbitSegment orbit =
            flow::integrate(job.model, seed, job.sampling.horizon, job.sampling.step);
        const std::size_t stride = std::max<std::size_t>(1, orbit.size() / 200);
        for (std::size_t i = 0; i < orbit.size(); i += stride) {
          pts.push_back({orbit.states[i], label(orbit.states[i])});
        }
      }
      return pts;
    }
  }
  return pts;
}

void intersect_band(std::optional<forms::Interval>& acc, bool& started,
                    const std::optional<forms::Interval>& next) {
  if (!started) {
    acc = next;
    started = true;
    return;
  }
  if (!acc || !next) {
    acc.reset();
    return;
  }
  acc->lo = std::max(acc->lo, next->lo);
  acc->hi = std::min(acc->hi, next->hi);
  if (!(acc->lo < acc->hi)) acc.reset();
}

json interval_json(const std::optional<forms::Interval>& iv) {
  if (!iv) return json();
  return json::array({iv->lo, iv->hi});
}

json point_json(const Vec& x) {
  json arr = json::array();
  for (double v : x) arr.push_back(v);
  return arr;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CertifyJob parse_job(const kv::Config& cfg) {
  CertifyJob job;
  job.model_name = cfg.get("model");
  job.model = flow::model_from_config(cfg);
  if (job.model_name == "geomlorenz") {
    // Rebuild the typed model for region-aware sampling.
    flow::GeometricLorenzParams p;
    const auto spec = cfg.has("spectrum") ? cfg.get_doubles("spectrum")
                                          : Vec{p.l1, p.l2, p.l3};
    p.l1 = spec[0];
    p.l2 = spec[1];
    p.l3 = spec[2];
    p.rho = cfg.get_double_or("rho", p.rho);
    p.zeta = cfg.get_double_or("zeta", p.zeta);
    p.linear_half_width = cfg.get_double_or("linear_half_width", p.linear_half_width);
    p.lobe_start = cfg.get_double_or("lobe_start", p.lobe_start);
    p.mode = cfg.get_or("mode", "matrix-family") == "full-jacobian"
                 ? flow::JacobianMode::FullJacobian
                 : flow::JacobianMode::MatrixFamily;
    job.geom = flow::GeometricLorenzModel(p);
  }

  const std::string sampling = cfg.get_or("sampling", "grid");
  if (sampling == "grid") {
    job.sampling.kind = SamplingKind::Grid;
    const auto box = cfg.get_doubles("grid_box");
    if (box.size() != 2 * job.model.dim) {
      throw std::runtime_error("job: grid_box needs lo/hi per axis (x0 x1 y0 y1 z0 z1)");
    }
    flow::Box b;
    for (std::size_t d = 0; d < job.model.dim; ++d) {
      b.lo.push_back(box[2 * d]);
      b.hi.push_back(box[2 * d + 1]);
    }
    job.sampling.grid_box = b;
    job.sampling.grid_res = cfg.get_int_or("grid_res", 5);
    if (job.sampling.grid_res < 2) throw std::runtime_error("job: grid_res must be >= 2");
  } else if (sampling == "regions") {
    job.sampling.kind = SamplingKind::Regions;
    job.sampling.linear_res = cfg.get_int_or("linear_res", 3);
    job.sampling.lobe_res = cfg.get_int_or("lobe_res", 3);
    job.sampling.mu_steps = cfg.get_int_or("mu_steps", 101);
    if (job.sampling.linear_res < 2 || job.sampling.lobe_res < 2 || job.sampling.mu_steps < 2) {
      throw std::runtime_error("job: regions sampling resolutions must be >= 2");
    }
  } else if (sampling == "orbits") {
    job.sampling.kind = SamplingKind::Orbits;
    const auto raw = cfg.get_doubles("seeds");
    if (raw.empty() || raw.size() % job.model.dim != 0) {
      throw std::runtime_error("job: seeds must be a flat list of dim-sized points");
    }
    for (std::size_t i = 0; i < raw.size(); i += job.model.dim) {
      job.sampling.seeds.emplace_back(raw.begin() + i, raw.begin() + i + job.model.dim);
    }
  } else {
    throw std::runtime_error("job: unknown sampling '" + sampling + "'");
  }
  job.sampling.horizon = cfg.get_double_or("horizon", job.sampling.horizon);
  if (!(job.sampling.horizon >= 0.0)) throw std::runtime_error("job: horizon must be >= 0");
  job.sampling.step = cfg.get_double_or("step", job.sampling.step);
  if (!(job.sampling.step > 0.0)) throw std::runtime_error("job: step must be positive");

  job.form = parse_form(cfg, job.model);

  std::set<std::string> checks;
  for (const std::string& w : cfg.has("checks") ? cfg.get_words("checks")
                                                : std::vector<std::string>{"separation"}) {
    if (!kKnownChecks.count(w)) throw std::runtime_error("job: unknown check '" + w + "'");
    checks.insert(w);
  }
  job.checks = close_checks(checks);

  job.rule = forms::delta_rule_from_string(cfg.get_or("delta_rule", "midpoint"));
  job.out_path = cfg.get_or("out", "");
  job.threads = static_cast<int>(cfg.get_int_or("threads", 1));
  if (job.threads < 1) throw std::runtime_error("job: threads must be >= 1");
  job.contracted_dim = cfg.get_int_or("s", 1);
  if (job.contracted_dim < 1 ||
      job.contracted_dim >= static_cast<long>(job.model.dim)) {
    throw std::runtime_error("job: s must satisfy 1 <= s < dim");
  }
  const bool orbit_checks =
      job.checks.count("rates") || job.checks.count("trichotomy") || job.checks.count("metric") ||
      job.checks.count("theoremA");
  if (orbit_checks && job.sampling.kind != SamplingKind::Orbits && !cfg.has("seeds")) {
    throw std::runtime_error("job: rate/trichotomy/metric/theoremA checks need orbit seeds");
  }
  if (orbit_checks && job.sampling.kind != SamplingKind::Orbits) {
    const auto raw = cfg.get_doubles("seeds");
    for (std::size_t i = 0; i + job.model.dim <= raw.size(); i += job.model.dim) {
      job.sampling.seeds.emplace_back(raw.begin() + i, raw.begin() + i + job.model.dim);
    }
  }
  return job;
}

CertifyOutcome run_certify(const CertifyJob& job) {
  const bool with_wedge = job.checks.count("wedge") > 0;
  const std::vector<LabeledPoint> pts = collect_samples(job);
  std::vector<SampleRecord> records(pts.size());

  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      SampleRecord& rec = records[i];
      rec.point = pts[i].point;
      rec.region = pts[i].region;
      try {
        const matcore::SquareMatrix d = job.model.jacobian(rec.point);
        const forms::SeparationCertificate cert =
            forms::certify_point(*job.form, d, rec.point, with_wedge);
        rec.delta = cert.delta;
        rec.trace2 = cert.trace2;
        rec.delta2 = cert.delta2;
        rec.criterion2 = cert.criterion2;
        rec.verdicts = cert.verdicts;
        rec.delta_selected = forms::select_delta(*job.form, d, cert.delta, job.rule);
        if (with_wedge && rec.delta_selected) {
          rec.delta2_selected = cert.trace2 - *rec.delta_selected;
        }
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    }
  };
  if (job.threads <= 1 || records.size() < 2) {
    work(0, records.size());
  } else {
    const std::size_t nthreads = std::min<std::size_t>(job.threads, records.size());
    std::vector<std::thread> pool;
    const std::size_t chunk = (records.size() + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(records.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  CertifyOutcome out;
  CertifySummary& sum = out.summary;
  sum.sample_count = records.size();
  sum.all_separated = !records.empty();
  sum.all_wedge_separated = with_wedge && !records.empty();
  sum.all_delta2_selected_positive = with_wedge && !records.empty();
  bool band_started = false, band2_started = false;
  std::map<std::string, std::pair<bool, std::optional<forms::Interval>>> region_bands;
  for (const SampleRecord& rec : records) {
    if (!rec.error.empty()) {
      ++sum.error_count;
      sum.all_separated = false;
      sum.all_wedge_separated = false;
      sum.all_delta2_selected_positive = false;
      continue;
    }
    sum.all_separated = sum.all_separated && rec.verdicts.strictly_separated;
    if (with_wedge) {
      sum.all_wedge_separated = sum.all_wedge_separated && rec.verdicts.wedge_separated;
      sum.all_delta2_selected_positive = sum.all_delta2_selected_positive &&
                                         rec.delta2_selected && *rec.delta2_selected > 0.0;
    }
    intersect_band(sum.uniform_delta_band, band_started, rec.delta);
    if (with_wedge) intersect_band(sum.uniform_delta2_band, band2_started, rec.delta2);
    auto& rb = region_bands[rec.region];
    intersect_band(rb.second, rb.first, rec.delta);
  }
  for (const auto& [region, band] : region_bands) {
    if (band.second) sum.region_delta_bands[region] = *band.second;
  }

  out.verdict = sum.all_separated && sum.error_count == 0;
  if (with_wedge) out.verdict = out.verdict && sum.all_wedge_separated;

  // Orbit-based checks ride on the job's seeds; any failure flips the
  // verdict, and hard errors (truncated orbits, bad seeds) propagate as
  // errors rather than negatives.
  json orbit_checks;
  const auto report_json = [](const domination::DominationReport& r) {
    return json{{"prefactor", r.prefactor}, {"rate", r.rate},   {"r2", r.r2},
                {"t_min", r.t_min},         {"t_max", r.t_max}, {"pass", r.pass}};
  };
  const bool wants_orbit_checks = job.checks.count("trichotomy") || job.checks.count("rates") ||
                                  job.checks.count("metric") || job.checks.count("theoremA");
  if (wants_orbit_checks && !job.sampling.seeds.empty()) {
    std::vector<flow::OrbitSegment> orbits;
    for (const Vec& seed : job.sampling.seeds) {
      orbits.push_back(
          flow::integrate(job.model, seed, job.sampling.horizon, job.sampling.step));
    }
    if (job.checks.count("trichotomy")) {
      const auto rep = domination::classify_trichotomy(job.model, orbits, *job.form, job.rule,
                                                       domination::CocycleSide::Base);
      orbit_checks["trichotomy"] = {{"verdict", domination::to_string(rep.verdict)},
                                    {"min_slope", rep.min_slope},
                                    {"max_slope", rep.max_slope},
                                    {"window", rep.window},
                                    {"finite_horizon", true}};
      out.verdict = out.verdict && rep.verdict != domination::Trichotomy::Inconclusive;
    }
    std::vector<domination::SplittingEstimate> splits;
    if (job.checks.count("rates") || job.checks.count("metric") || job.checks.count("theoremA")) {
      for (const Vec& seed : job.sampling.seeds) {
        splits.push_back(domination::estimate_splitting(
            job.model, seed, job.sampling.horizon,
            static_cast<std::size_t>(job.contracted_dim), job.sampling.step));
      }
    }
    if (job.checks.count("rates")) {
      json rates = json::array();
      for (std::size_t i = 0; i < orbits.size(); ++i) {
        const auto dom = domination::domination_rate(job.model, orbits[i], splits[i]);
        json entry{{"domination", report_json(dom)}};
        bool ok = dom.pass;
        if (splits[i].f_basis.size() >= 2) {
          const auto sec = domination::sectional_rate(
              job.model, orbits[i], splits[i].f_basis, domination::RatePolicy{},
              splits[i].f_basis.size() > 2 ? 4 : 0);
          entry["sectional"] = report_json(sec);
          ok = ok && sec.pass;
        }
        rates.push_back(std::move(entry));
        out.verdict = out.verdict && ok;
      }
      orbit_checks["rates"] = std::move(rates);
    }
    if (job.checks.count("metric")) {
      json metrics = json::array();
      for (std::size_t i = 0; i < splits.size(); ++i) {
        const auto rep = domination::adapted_metric_check(
            job.model, job.sampling.seeds[i], splits[i], *job.form, job.sampling.horizon,
            job.sampling.step);
        metrics.push_back(
            {{"lambda", rep.lambda}, {"xi", rep.xi}, {"pass", rep.pass}});
        out.verdict = out.verdict && rep.pass;
      }
      orbit_checks["metric"] = std::move(metrics);
    }
    if (job.checks.count("theoremA")) {
      const auto rep = domination::exterior_power_crosscheck(job.model, splits, 2,
                                                       job.sampling.horizon, job.sampling.step);
      json samples_json = json::array();
      for (const auto& s : rep.samples) {
        samples_json.push_back({{"base", report_json(s.base)},
                                {"wedge", report_json(s.wedge)},
                                {"agree", s.agree}});
      }
      orbit_checks["theoremA"] = {{"agree", rep.agree}, {"samples", std::move(samples_json)}};
      out.verdict = out.verdict && rep.agree;
    }
  }
  out.exit_code = out.verdict ? 0 : 2;

  json doc;
  doc["schema"] = "hypercone-cert/1";
  doc["model"] = job.model_name;
  doc["delta_rule"] = forms::to_string(job.rule);
  doc["checks"] = json(std::vector<std::string>(job.checks.begin(), job.checks.end()));
  json samples = json::array();
  for (const SampleRecord& rec : records) {
    json s;
    s["point"] = point_json(rec.point);
    if (!rec.region.empty()) s["region"] = rec.region;
    s["delta_lo"] = rec.delta ? json(rec.delta->lo) : json();
    s["delta_hi"] = rec.delta ? json(rec.delta->hi) : json();
    if (with_wedge) {
      s["delta2_lo"] = rec.delta2 ? json(rec.delta2->lo) : json();
      s["delta2_hi"] = rec.delta2 ? json(rec.delta2->hi) : json();
      s["criterion2"] = rec.criterion2;
    }
    if (rec.delta_selected) s["delta_selected"] = *rec.delta_selected;
    if (rec.delta2_selected) s["delta2_selected"] = *rec.delta2_selected;
    s["verdicts"] = {{"strictly_separated", rec.verdicts.strictly_separated},
                     {"wedge_separated", rec.verdicts.wedge_separated},
                     {"delta_negative_feasible", rec.verdicts.delta_negative_feasible},
                     {"delta2_positive_feasible", rec.verdicts.delta2_positive_feasible}};
    if (!rec.error.empty()) s["error"] = rec.error;
    samples.push_back(std::move(s));
  }
  doc["samples"] = std::move(samples);
  json summary;
  summary["all_separated"] = sum.all_separated;
  if (with_wedge) {
    summary["all_wedge_separated"] = sum.all_wedge_separated;
    summary["all_delta2_selected_positive"] = sum.all_delta2_selected_positive;
    summary["uniform_delta2_band"] = interval_json(sum.uniform_delta2_band);
  }
  summary["uniform_delta_band"] = interval_json(sum.uniform_delta_band);
  json region_bands_json;
  for (const auto& [region, band] : sum.region_delta_bands) {
    region_bands_json[region.empty() ? "all" : region] = interval_json(band);
  }
  summary["region_delta_bands"] = std::move(region_bands_json);
  summary["sample_count"] = sum.sample_count;
  summary["error_count"] = sum.error_count;
  doc["summary"] = std::move(summary);
  if (!orbit_checks.is_null()) doc["orbit_checks"] = std::move(orbit_checks);
  doc["verdict"] = out.verdict ? "pass" : "negative";
  out.certificate_json = doc.dump(2);
  out.certificate_json.push_back('\n');

  out.samples = std::move(records);
  return out;
}

OrbitOutcome run_orbit(const CertifyJob& job) {
  OrbitOutcome out;
  json report = json::array();
  for (const Vec& seed : job.sampling.seeds) {
    OrbitRunResult run;
    run.seed = seed;
    const flow::OrbitSegment orbit =
        flow::integrate(job.model, seed, job.sampling.horizon, job.sampling.step);
    run.truncated = orbit.truncated;

    std::vector<double> deltas(orbit.size(), 0.0);
    std::vector<bool> feasible(orbit.size(), false);
    std::size_t feasible_prefix = 0;
    for (std::size_t i = 0; i < orbit.size(); ++i) {
      const matcore::SquareMatrix d = job.model.jacobian(orbit.states[i]);
      const auto interval = forms::delta_interval(*job.form, d);
      const auto sel = forms::select_delta(*job.form, d, interval, job.rule);
      if (sel) {
        deltas[i] = *sel;
        feasible[i] = true;
        if (feasible_prefix == i) feasible_prefix = i + 1;
      }
    }
    run.feasible_until = feasible_prefix > 0 ? orbit.times[feasible_prefix - 1] : 0.0;
    if (feasible_prefix >= 2) {
      run.delta_area_feasible = domination::delta_area(
          std::vector<double>(orbit.times.begin(), orbit.times.begin() + feasible_prefix),
          std::vector<double>(deltas.begin(), deltas.begin() + feasible_prefix));
    }

    // Running integral over the feasible prefix only; after the first
    // infeasible point the column freezes.
    std::vector<double> running(orbit.size(), 0.0);
    for (std::size_t i = 1; i < feasible_prefix; ++i) {
      running[i] = running[i - 1] +
                   0.5 * (orbit.times[i] - orbit.times[i - 1]) * (deltas[i] + deltas[i - 1]);
    }
    for (std::size_t i = feasible_prefix; i < orbit.size(); ++i)
      running[i] = (feasible_prefix > 0) ? running[feasible_prefix - 1] : 0.0;

    std::ostringstream csv;
    csv << "t";
    for (std::size_t d = 1; d <= job.model.dim; ++d) csv << ",x" << d;
    csv << ",delta,delta2,Delta\n";
    for (std::size_t i = 0; i < orbit.size(); ++i) {
      csv << format_double(orbit.times[i]);
      for (double c : orbit.states[i]) csv << ',' << format_double(c);
      if (feasible[i]) {
        const double trace2 = 2.0 * job.model.jacobian(orbit.states[i]).trace();
        csv << ',' << format_double(deltas[i]) << ','
            << format_double(trace2 - deltas[i]);
      } else {
        csv << ",,";
      }
      csv << ',' << format_double(running[i]) << "\n";
    }
    run.csv = csv.str();

    if (job.checks.count("rates") && orbit.duration() > 0.0 && !orbit.truncated) {
      const domination::SplittingEstimate split = domination::estimate_splitting(
          job.model, seed, orbit.duration(), static_cast<std::size_t>(job.contracted_dim),
          job.sampling.step);
      run.domination = domination::domination_rate(job.model, orbit, split);
      if (split.f_basis.size() >= 2) {
        run.sectional = domination::sectional_rate(job.model, orbit, split.f_basis,
                                                   domination::RatePolicy{},
                                                   split.f_basis.size() > 2 ? 4 : 0);
      }
    }

    json entry;
    entry["seed"] = point_json(seed);
    entry["truncated"] = run.truncated;
    entry["feasible_until"] = run.feasible_until;
    entry["delta_area_feasible"] = run.delta_area_feasible;
    const auto report_json = [](const domination::DominationReport& r) {
      return json{{"prefactor", r.prefactor}, {"rate", r.rate},   {"r2", r.r2},
                  {"t_min", r.t_min},         {"t_max", r.t_max}, {"pass", r.pass}};
    };
    if (run.domination) entry["domination"] = report_json(*run.domination);
    if (run.sectional) entry["sectional"] = report_json(*run.sectional);
    report.push_back(std::move(entry));
    out.orbits.push_back(std::move(run));
  }
  json doc;
  doc["schema"] = "hypercone-orbit/1";
  doc["orbits"] = std::move(report);
  out.report_json = doc.dump(2);
  out.report_json.push_back('\n');
  return out;
}

}  // namespace hypercone::certify
