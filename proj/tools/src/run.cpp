#include "incstab/cli/run.hpp"

#include "incstab/estimator.hpp"
#include "incstab/fhn.hpp"
#include "incstab/invariance.hpp"
#include "incstab/sampling.hpp"
#include "incstab/smallgain.hpp"

#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#ifndef INCSTAB_VERSION
#define INCSTAB_VERSION "unknown"
#endif

namespace incstab::cli {

namespace fs = std::filesystem;

namespace {

using Echo = std::vector<std::pair<std::string, std::string>>;

std::string fmt(double v) { return format_double(v); }

// Samples kept for output: every stride-th step plus the final one. Adaptive
// runs are resampled on the uniform grid t0 + k * step * stride.
struct Sampled {
  std::vector<double> times;
  std::vector<Vector> states;
};

Sampled resample(const AugmentedTrajectory &traj, const Scenario &s) {
  Sampled out;
  if (traj.size() == 0) return out;
  if (s.integrator.method == IntegratorMethod::fixed_rk4) {
    for (std::size_t i = 0; i < traj.size(); i += s.output_stride) {
      out.times.push_back(traj.times[i]);
      out.states.push_back(traj.states[i]);
    }
    if (out.times.back() != traj.times.back()) {
      out.times.push_back(traj.times.back());
      out.states.push_back(traj.states.back());
    }
    return out;
  }
  const double dt = s.step * static_cast<double>(s.output_stride);
  for (std::size_t k = 0;; ++k) {
    const double t = traj.t0 + static_cast<double>(k) * dt;
    if (t >= traj.t_end()) break;
    out.times.push_back(t);
    out.states.push_back(traj.state_at(t));
  }
  out.times.push_back(traj.t_end());
  out.states.push_back(traj.states.back());
  return out;
}

std::string column_names(const Scenario &s) {
  if (s.system == SystemKind::fhn) return "x,y";
  std::string names;
  for (int i = 0; i < s.dim(); ++i) names += (i ? ",z" : "z") + std::to_string(i + 1);
  return names;
}

void append_row(std::string &out, std::initializer_list<double> head, const Vector &tail) {
  bool first = true;
  for (double v : head) {
    if (!first) out += ',';
    out += fmt(v);
    first = false;
  }
  for (Eigen::Index i = 0; i < tail.size(); ++i) {
    if (!first) out += ',';
    out += fmt(tail[i]);
    first = false;
  }
  out += '\n';
}

KeyValueSection echo_section(const Scenario &s) {
  KeyValueSection sec;
  sec.name = "scenario";
  sec.set("tool", std::string("incstab ") + tool_version());
  for (const auto &[k, v] : s.echo) sec.set(k, v);
  return sec;
}

std::string render(const KeyValueDocument &doc) {
  std::ostringstream os;
  write_key_value(os, doc);
  return os.str();
}

fs::path output_dir(const Scenario &s, const RunOptions &o) {
  const fs::path dir = o.out_dir ? *o.out_dir : s.output_path;
  fs::create_directories(dir);
  return dir;
}

RunResult run_simulate(const Scenario &s, const fs::path &dir, std::ostream &log) {
  const TimeVaryingField field = scenario_field(s);
  std::string csv = csv_comment(s) + "ic_id,t," + column_names(s) + '\n';
  RunResult res;
  for (std::size_t i = 0; i < s.initial_conditions.size(); ++i) {
    const auto traj = integrate(field, s.t0, s.initial_conditions[i], s.integrator);
    const Sampled out = resample(traj, s);
    for (std::size_t k = 0; k < out.times.size(); ++k)
      append_row(csv, {static_cast<double>(i + 1), out.times[k]}, out.states[k]);
    if (traj.blow_up) {
      res.exit_code = exit_blow_up;
      res.message = "numerical blow-up of z" + std::to_string(i + 1) + " at t = " +
                    fmt(traj.blow_up_time);
    }
  }
  const fs::path path = dir / (s.name + "_simulate.csv");
  write_atomic(path, csv);
  res.files.push_back(path);
  log << "simulate: " << s.initial_conditions.size() << " trajectories -> " << path.string()
      << '\n';
  return res;
}

RunResult run_estimate(const Scenario &s, const fs::path &dir, std::ostream &log) {
  const TimeVaryingField field = scenario_field(s);
  std::vector<std::pair<Vector, Vector>> pairs;
  for (std::size_t i = 0; i + 1 < s.initial_conditions.size(); i += 2)
    pairs.emplace_back(s.initial_conditions[i], s.initial_conditions[i + 1]);
  if (s.estimate.random_pairs > 0) {
    const auto drawn =
        random_pairs_in_box(s.estimate.box_lo, s.estimate.box_hi, s.estimate.random_pairs, s.seed);
    pairs.insert(pairs.end(), drawn.begin(), drawn.end());
  }
  EnsembleOptions opt;
  opt.keep_series = true;
  opt.threads = s.estimate.threads;
  opt.fit.transient_skip = s.estimate.transient_skip;
  opt.fit.lambda_min = s.estimate.lambda_min;
  EnsembleReport report = ensemble_ies(field, pairs, s.t0, s.integrator, opt);

  for (auto &p : report.pairs) {
    DistanceSeries thinned;
    thinned.blow_up = p.series.blow_up;
    const std::size_t n = p.series.times.size();
    for (std::size_t k = 0; k < n; k += s.output_stride) {
      thinned.times.push_back(p.series.times[k]);
      thinned.distance.push_back(p.series.distance[k]);
    }
    if (n > 0 && thinned.times.back() != p.series.times.back()) {
      thinned.times.push_back(p.series.times.back());
      thinned.distance.push_back(p.series.distance.back());
    }
    p.series = std::move(thinned);
  }

  std::ostringstream dist;
  std::ostringstream summary;
  write_distance_csv(dist, report);
  write_summary_csv(summary, report);
  const Echo extra = {{"pairs", std::to_string(pairs.size())}};
  const fs::path dist_path = dir / (s.name + "_distance.csv");
  const fs::path summary_path = dir / (s.name + "_summary.csv");
  write_atomic(dist_path, csv_comment(s, extra) + dist.str());
  write_atomic(summary_path, csv_comment(s, extra) + summary.str());

  RunResult res;
  res.files = {dist_path, summary_path};
  log << "estimate: " << pairs.size() << " pairs, " << report.contracting << " contracting, "
      << report.non_contracting << " non_contracting, " << report.inconclusive
      << " inconclusive; min lambda " << fmt(report.min_lambda) << ", max K " << fmt(report.max_K)
      << '\n';
  if (report.any_blow_up) {
    res.exit_code = exit_blow_up;
    res.message = "numerical blow-up in at least one pair";
  }
  return res;
}

OuterLyapunov outer_for(const Scenario &s) {
  return s.system == SystemKind::fhn ? fhn_outer_lyapunov(s.fhn) : half_squared_norm();
}

InvariantSearch search_for(const Scenario &s) {
  InvariantSearch search;
  search.level_min = s.invariant.level_min;
  search.level_max = s.invariant.level_max;
  search.level_count = s.invariant.level_count;
  search.grid_density = s.invariant.grid_density;
  search.shell_width = s.invariant.shell_width;
  search.t = s.t0;
  return search;
}

RunResult run_invariant_set(const Scenario &s, const fs::path &dir, std::ostream &log) {
  const InvariantSetEstimate est = find_invariant_level(outer_for(s), scenario_field(s), search_for(s));
  KeyValueDocument doc = invariant_set_record(est);
  doc.sections.insert(doc.sections.begin(), echo_section(s));
  const fs::path path = dir / (s.name + "_invariant_set.ini");
  write_atomic(path, render(doc));
  RunResult res;
  res.files.push_back(path);
  if (!est.found) {
    res.exit_code = exit_refused;
    res.message = est.message;
    return res;
  }
  log << "invariant-set: level " << fmt(est.level) << ", radius " << fmt(est.radius) << " -> "
      << path.string() << '\n';
  return res;
}

RunResult run_certify(const Scenario &s, const fs::path &dir, std::ostream &log) {
  fhn::QuadratureConfig qc;
  qc.table_points = s.fc_table.table_points;
  const auto table = std::make_shared<const fhn::FcTable>(fhn::build_fc(s.fhn, qc));
  const Interconnection ic = scenario_interconnection(s);

  RunResult res;
  double radius = 0.0;
  std::optional<InvariantSetEstimate> inv;
  if (s.certify.radius) {
    radius = *s.certify.radius;
  } else {
    inv = find_invariant_level(outer_for(s), scenario_field(s), search_for(s));
    if (!inv->found) {
      res.exit_code = exit_refused;
      res.message = "certification refused: no invariant level found to fix R (" + inv->message + ")";
      return res;
    }
    radius = inv->radius;
  }

  CertifyRequest req;
  req.radius = radius;
  req.alpha1 = fhn::v1_rate(*table);
  req.alpha2 = fhn::v2_rate(s.fhn);
  req.alpha = s.certify.alpha.value_or(0.5 * std::min(req.alpha1, req.alpha2));
  if (s.certify.use_param_gains) req.requested_gains = std::make_pair(s.fhn.rho1, s.fhn.rho2);
  req.grid_density = s.certify.grid_density;
  req.safety_factor = s.certify.safety_factor;
  req.decay_samples = s.certify.samples;
  req.tolerance.slack = s.tolerance;
  req.t = s.t0;
  const Certification cert = certify(ic, fhn::v1_candidate(table), fhn::v2_candidate(),
                                     fhn::v1_bounds(table), fhn::v2_bounds(), req);

  KeyValueDocument doc = certificate_record(cert);
  doc.sections.insert(doc.sections.begin(), echo_section(s));
  auto &fc = doc.section("fc_weight");
  fc.set("mu", table->mu);
  fc.set("eta", table->eta);
  fc.set("s_star", table->s_star);
  fc.set("quadrature_error", table->quadrature_error);
  if (inv) {
    auto &r = doc.section("radius");
    r.set("source", "invariant level search");
    r.set("level", inv->level);
    r.set("grid_spacing", inv->grid_spacing);
  }
  if (s.fhn.b > s.fhn.epsilon && s.fhn.rho1 == 1.0 && s.fhn.rho2 == 1.0) {
    const auto bound = fhn::composite_vdot_bound(s.fhn, *table, s.certify.margin_m);
    auto &cb = doc.section("composite_bound");
    cb.set("margin", s.certify.margin_m);
    cb.set("coef_dx", bound.coef_dx);
    cb.set("coef_dy", bound.coef_dy);
    cb.set("concludes_ies", bound.concludes_ies ? "true" : "false");
  }

  std::ostringstream report;
  write_certificate_report(report, cert);
  const fs::path record_path = dir / (s.name + "_certificate.ini");
  const fs::path report_path = dir / (s.name + "_certificate.txt");
  write_atomic(record_path, render(doc));
  write_atomic(report_path, report.str());
  res.files = {record_path, report_path};
  log << "certify: " << to_string(cert.status) << " (R = " << fmt(radius) << ", rho1 <= "
      << fmt(cert.certificate.rho1_max) << ", rho2 <= " << fmt(cert.certificate.rho2_max)
      << ")\n";
  if (!cert.passed()) {
    res.exit_code = exit_refused;
    res.message = "certification refused: " + cert.message;
  }
  return res;
}

RunResult run_fc_table(const Scenario &s, const fs::path &dir, std::ostream &log) {
  fhn::QuadratureConfig qc;
  qc.table_points = s.fc_table.table_points;
  const fhn::FcTable table = fhn::build_fc(s.fhn, qc);
  const Echo extra = {{"mu", fmt(table.mu)},
                      {"eta", fmt(table.eta)},
                      {"s_star", fmt(table.s_star)},
                      {"quadrature_error", fmt(table.quadrature_error)}};
  std::string csv = csv_comment(s, extra) + "x,f_c,f_c_prime\n";
  const double half = table.s_star + 0.5;
  const int n = s.fc_table.points;
  for (int k = 0; k < n; ++k) {
    const double x = -half + 2.0 * half * k / (n - 1);
    append_row(csv, {x, table.fc(x), table.fc_prime(x)}, Vector());
  }
  const fs::path path = dir / (s.name + "_fc_table.csv");
  write_atomic(path, csv);
  log << "fc-table: mu = " << fmt(table.mu) << ", eta = " << fmt(table.eta) << " -> "
      << path.string() << '\n';
  RunResult res;
  res.files.push_back(path);
  return res;
}

RunResult run_figures(const Scenario &base, const fs::path &dir, std::ostream &log) {
  const auto [z1, z2] = base.initial_conditions.size() == 2
                            ? std::make_pair(base.initial_conditions[0], base.initial_conditions[1])
                            : figure_pair();
  RunResult res;
  for (int f = 1; f <= 3; ++f) {
    Scenario s = base;
    s.name = "fig" + std::to_string(f);
    s.fhn = fhn::figure_params(f);
    s.initial_conditions = {z1, z2};
    refresh_echo(s);
    const TimeVaryingField field = scenario_field(s);
    const auto a = integrate(field, s.t0, z1, s.integrator);
    const auto b = integrate(field, s.t0, z2, s.integrator);
    const Sampled sa = resample(a, s);
    const Sampled sb = resample(b, s);

    std::string csv = csv_comment(s, {{"figure", std::to_string(f)}}) + "t,x1,y1,x2,y2,distance\n";
    const std::size_t rows = std::min(sa.times.size(), sb.times.size());
    for (std::size_t k = 0; k < rows; ++k) {
      Vector tail(5);
      tail << sa.states[k][0], sa.states[k][1], sb.states[k][0], sb.states[k][1],
          (sa.states[k] - sb.states[k]).norm();
      append_row(csv, {sa.times[k]}, tail);
    }
    const fs::path path = dir / (s.name + ".csv");
    write_atomic(path, csv);
    res.files.push_back(path);
    log << "figures: " << path.string() << '\n';
    if (a.blow_up || b.blow_up) {
      res.exit_code = exit_blow_up;
      res.message = "numerical blow-up in figure " + std::to_string(f);
    }
  }
  return res;
}

}  // namespace

const char *tool_version() { return INCSTAB_VERSION; }

void write_atomic(const fs::path &path, const std::string &contents) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string csv_comment(const Scenario &s, const Echo &extra) {
  std::string line = std::string("# incstab ") + tool_version();
  for (const auto &[k, v] : s.echo) line += ' ' + k + '=' + v;
  for (const auto &[k, v] : extra) line += ' ' + k + '=' + v;
  return line + '\n';
}

std::pair<Vector, Vector> figure_pair() {
  Vector z1(2);
  Vector z2(2);
  z1 << 2.0, 0.0;
  z2 << -2.0, 1.0;
  return {z1, z2};
}

RunResult run(Scenario scenario, const RunOptions &options, std::ostream &log) {
  if (options.seed) scenario.seed = *options.seed;
  if (options.tolerance) {
    if (!(*options.tolerance >= 0.0))
      throw ConfigError("--tolerance", 0, "tolerance must be nonnegative");
    scenario.tolerance = *options.tolerance;
  }
  refresh_echo(scenario);
  const fs::path dir = output_dir(scenario, options);
  switch (scenario.action) {
    case Action::simulate: return run_simulate(scenario, dir, log);
    case Action::estimate: return run_estimate(scenario, dir, log);
    case Action::invariant_set: return run_invariant_set(scenario, dir, log);
    case Action::certify: return run_certify(scenario, dir, log);
    case Action::fc_table: return run_fc_table(scenario, dir, log);
    case Action::figures: return run_figures(scenario, dir, log);
  }
  throw std::logic_error("unknown action");
}

int run_command(Action action, const std::optional<fs::path> &config, const RunOptions &options,
                std::ostream &out, std::ostream &err) {
  try {
    Scenario s = config ? parse_config(*config, action) : default_scenario(action);
    const RunResult res = run(std::move(s), options, out);
    if (res.exit_code != exit_ok) err << "incstab: " << res.message << '\n';
    return res.exit_code;
  } catch (const ParseError &e) {
    err << e.what() << '\n';
    return exit_config_error;
  } catch (const std::exception &e) {
    err << "incstab: internal error: " << e.what() << '\n';
    return exit_internal_error;
  }
}

}  // namespace incstab::cli
