#include "incstab/smallgain.hpp"

#include "incstab/sampling.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace incstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double spectral_norm(const Matrix &m) {
  if (m.size() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double checked(double v, const char *what) {
  if (!std::isfinite(v))
    throw std::domain_error(std::string("extract_constants: non-finite ") + what + " inside the ball");
  return v;
}

// Grid maximum of fn over the ball, then a compass search from the best node
// down to spacing * 1e-7 so that the value does not depend on grid alignment.
double sampled_sup(int dim, double radius, int density, const std::function<double(const Vector &)> &fn,
                   const char *what) {
  double best = 0.0;
  Vector arg = Vector::Zero(dim);
  for (const auto &z : ball_grid(dim, radius, density)) {
    const double v = checked(fn(z), what);
    if (v > best) {
      best = v;
      arg = z;
    }
  }
  const double spacing = 2.0 * radius / std::max(density - 1, 1);
  for (double step = spacing; step > spacing * 1e-7; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int i = 0; i < dim; ++i)
        for (double sign : {1.0, -1.0}) {
          Vector z = arg;
          z[i] += sign * step;
          if (z.norm() > radius) continue;
          const double v = checked(fn(z), what);
          if (v > best) {
            best = v;
            arg = z;
            moved = true;
          }
        }
    }
  }
  return best;
}

// min(num1 / den1, num2 / den2) with x / 0 read as +inf.
double budget(double num1, double den1, double num2, double den2) {
  const double first = den1 > 0.0 ? num1 / den1 : kInf;
  const double second = den2 > 0.0 ? num2 / den2 : kInf;
  return std::min(first, second);
}

}  // namespace

SupConstants extract_constants(const Interconnection &ic, const AssumptionTwoBounds &bounds1,
                               const AssumptionTwoBounds &bounds2, double radius,
                               int grid_density, double safety_factor) {
  if (!(radius > 0.0)) throw std::invalid_argument("extract_constants: R must be positive");
  if (safety_factor < 1.0) throw std::invalid_argument("extract_constants: safety factor below 1");
  SupConstants k;
  k.radius = radius;
  k.safety_factor = safety_factor;
  k.grid_density = grid_density;

  const int n = ic.n();
  const int m = ic.m();
  k.a2 = sampled_sup(n, radius, grid_density, [&](const Vector &x) { return ic.g2.eval(x).norm(); }, "|g2|");
  k.b2 = sampled_sup(n, radius, grid_density,
                     [&](const Vector &x) { return spectral_norm(ic.g2.jacobian(x)); }, "|dg2/dx|");
  k.eta1 = sampled_sup(n, radius, grid_density, [&](const Vector &x) { return std::abs(bounds1.gamma(x)); },
                       "gamma1");
  k.theta1 = sampled_sup(n, radius, grid_density, [&](const Vector &x) { return std::abs(bounds1.zeta(x)); },
                         "zeta1");
  k.a1 = sampled_sup(m, radius, grid_density, [&](const Vector &y) { return ic.g1.eval(y).norm(); }, "|g1|");
  k.b1 = sampled_sup(m, radius, grid_density,
                     [&](const Vector &y) { return spectral_norm(ic.g1.jacobian(y)); }, "|dg1/dy|");
  k.eta2 = sampled_sup(m, radius, grid_density, [&](const Vector &y) { return std::abs(bounds2.gamma(y)); },
                       "gamma2");
  k.theta2 = sampled_sup(m, radius, grid_density, [&](const Vector &y) { return std::abs(bounds2.zeta(y)); },
                         "zeta2");
  for (double *v : {&k.a1, &k.a2, &k.b1, &k.b2, &k.eta1, &k.eta2, &k.theta1, &k.theta2})
    *v *= safety_factor;
  return k;
}

Slack default_slack(double alpha1, double alpha2, double alpha) {
  Slack s;
  s.eps[0] = s.eps[1] = (alpha1 - alpha) / 3.0;
  s.eps[2] = s.eps[3] = (alpha2 - alpha) / 3.0;
  return s;
}

GainBudget gain_budget(const SupConstants &k, double alpha1, double alpha2, double alpha,
                       const Slack &slack) {
  GainBudget out;
  if (!(alpha > 0.0)) throw std::invalid_argument("gain_budget: alpha must be positive");
  if (alpha >= std::min(alpha1, alpha2)) {
    out.reason = "target rate alpha must be below min(alpha1, alpha2)";
    return out;
  }
  const auto &[e1, e2, e3, e4] = slack.eps;
  for (double e : slack.eps)
    if (!(e > 0.0)) throw std::invalid_argument("gain_budget: slack values must be positive");
  if (!(e1 + e2 < alpha1 - alpha))
    throw std::invalid_argument("gain_budget: eps1 + eps2 must be below alpha1 - alpha");
  if (!(e3 + e4 < alpha2 - alpha))
    throw std::invalid_argument("gain_budget: eps3 + eps4 must be below alpha2 - alpha");

  out.feasible = true;
  out.rho1_max = budget(2.0 * e1, 2.0 * k.a1 * k.eta1 + k.b1 * k.theta1 * k.theta1, 2.0 * e4, k.b1);
  out.rho2_max = budget(2.0 * e3, 2.0 * k.a2 * k.eta2 + k.b2 * k.theta2 * k.theta2, 2.0 * e2, k.b2);
  return out;
}

std::pair<double, double> gain_conditions(const SupConstants &k, double alpha1, double alpha2,
                                          double rho1, double rho2) {
  const double first =
      -alpha1 + rho1 * (k.a1 * k.eta1 + k.b1 * k.theta1 * k.theta1 / 2.0) + rho2 * k.b2 / 2.0;
  const double second =
      -alpha2 + rho2 * (k.a2 * k.eta2 + k.b2 * k.theta2 * k.theta2 / 2.0) + rho1 * k.b1 / 2.0;
  return {first, second};
}

const char *to_string(CertificationStatus s) {
  switch (s) {
    case CertificationStatus::certified: return "certified";
    case CertificationStatus::component_check_failed: return "component_check_failed";
    case CertificationStatus::infeasible_budget: return "infeasible_budget";
    case CertificationStatus::requested_gain_exceeds_budget: return "requested_gain_exceeds_budget";
    case CertificationStatus::composite_check_failed: return "composite_check_failed";
  }
  return "unknown";
}

Certification certify(const Interconnection &ic, const FinslerCandidate &cand1,
                      const FinslerCandidate &cand2, const AssumptionTwoBounds &bounds1,
                      const AssumptionTwoBounds &bounds2, const CertifyRequest &req) {
  if (cand1.dim != ic.n() || cand2.dim != ic.m())
    throw DimensionError("certify: candidate dimensions do not match the interconnection blocks");
  if (!(req.radius > 0.0)) throw std::invalid_argument("certify: R must be positive");

  Certification out;
  auto &cert = out.certificate;
  cert.alpha1 = req.alpha1;
  cert.alpha2 = req.alpha2;
  cert.alpha = req.alpha;

  // Component conditions V_i' <= -alpha_i |d.|^2 on the isolated fields.
  const auto s1 = at_time(req.t, ball_displacement_samples(ic.n(), req.radius, req.decay_samples));
  const auto s2 = at_time(req.t, ball_displacement_samples(ic.m(), req.radius, req.decay_samples));
  out.component1 = check_decay(cand1, ic.f1, req.alpha1, s1, DecayForm::relative_to_norm, req.tolerance);
  out.component2 = check_decay(cand2, ic.f2, req.alpha2, s2, DecayForm::relative_to_norm, req.tolerance);
  if (!out.component1.passed || !out.component2.passed) {
    out.status = CertificationStatus::component_check_failed;
    out.message = !out.component1.passed ? "x-block: " + out.component1.summary()
                                         : "y-block: " + out.component2.summary();
    return out;
  }

  cert.constants = extract_constants(ic, bounds1, bounds2, req.radius, req.grid_density,
                                     req.safety_factor);
  if (!(req.alpha > 0.0) || req.alpha >= std::min(req.alpha1, req.alpha2)) {
    out.status = CertificationStatus::infeasible_budget;
    out.message = "target rate alpha must lie in (0, min(alpha1, alpha2))";
    return out;
  }
  cert.slack = req.slack.value_or(default_slack(req.alpha1, req.alpha2, req.alpha));
  const GainBudget gb = gain_budget(cert.constants, req.alpha1, req.alpha2, req.alpha, cert.slack);
  if (!gb.feasible) {
    out.status = CertificationStatus::infeasible_budget;
    out.message = gb.reason;
    return out;
  }
  cert.rho1_max = gb.rho1_max;
  cert.rho2_max = gb.rho2_max;

  if (req.requested_gains) {
    const auto [r1, r2] = *req.requested_gains;
    out.checked_rho1 = r1;
    out.checked_rho2 = r2;
    if (r1 > gb.rho1_max || r2 > gb.rho2_max) {
      std::ostringstream os;
      os << "requested gains (" << r1 << ", " << r2 << ") exceed the budget (" << gb.rho1_max
         << ", " << gb.rho2_max << ")";
      out.status = CertificationStatus::requested_gain_exceeds_budget;
      out.message = os.str();
      return out;
    }
  } else {
    out.checked_rho1 = std::isfinite(gb.rho1_max) ? gb.rho1_max : 1.0;
    out.checked_rho2 = std::isfinite(gb.rho2_max) ? gb.rho2_max : 1.0;
  }

  Interconnection at_gains = ic;
  at_gains.rho1 = out.checked_rho1;
  at_gains.rho2 = out.checked_rho2;
  const TimeVaryingField field = assemble(at_gains);
  const FinslerCandidate composite = compose(cand1, cand2);
  const auto s = at_time(req.t, ball_displacement_samples(field.dim, req.radius, req.decay_samples));
  out.composite = check_decay(composite, field, req.alpha, s, DecayForm::relative_to_norm, req.tolerance);
  if (!out.composite->passed) {
    out.status = CertificationStatus::composite_check_failed;
    out.message = out.composite->summary();
    return out;
  }
  out.status = CertificationStatus::certified;
  out.message = "composite " + out.composite->summary();
  return out;
}

KeyValueDocument certificate_record(const Certification &c) {
  KeyValueDocument doc;
  auto &head = doc.section("certificate");
  head.set("status", to_string(c.status));
  head.set("passed", c.passed() ? "true" : "false");
  head.set("evidence", "sampled; no violation found is not a proof");
  head.set("message", c.message);

  const auto &k = c.certificate.constants;
  auto &consts = doc.section("constants");
  consts.set("provenance", "sampled maxima on a per-axis grid of the ball, inflated by safety_factor");
  consts.set("radius", k.radius);
  consts.set("safety_factor", k.safety_factor);
  consts.set("grid_density", static_cast<double>(k.grid_density));
  consts.set("a1", k.a1);
  consts.set("a2", k.a2);
  consts.set("b1", k.b1);
  consts.set("b2", k.b2);
  consts.set("eta1", k.eta1);
  consts.set("eta2", k.eta2);
  consts.set("theta1", k.theta1);
  consts.set("theta2", k.theta2);

  auto &bud = doc.section("budget");
  bud.set("alpha1", c.certificate.alpha1);
  bud.set("alpha2", c.certificate.alpha2);
  bud.set("alpha", c.certificate.alpha);
  for (std::size_t i = 0; i < 4; ++i)
    bud.set("eps" + std::to_string(i + 1), c.certificate.slack.eps[i]);
  bud.set("rho1_max", c.certificate.rho1_max);
  bud.set("rho2_max", c.certificate.rho2_max);
  bud.set("checked_rho1", c.checked_rho1);
  bud.set("checked_rho2", c.checked_rho2);

  auto &checks = doc.section("checks");
  checks.set("component1_worst", c.component1.worst_violation);
  checks.set("component1_passed", c.component1.passed ? "true" : "false");
  checks.set("component2_worst", c.component2.worst_violation);
  checks.set("component2_passed", c.component2.passed ? "true" : "false");
  if (c.composite) {
    checks.set("composite_samples", static_cast<double>(c.composite->samples));
    checks.set("composite_worst", c.composite->worst_violation);
    checks.set("composite_passed", c.composite->passed ? "true" : "false");
  }
  return doc;
}

void write_certificate_report(std::ostream &os, const Certification &c) {
  const auto &cert = c.certificate;
  const auto &k = cert.constants;
  os << "Gain certificate: " << to_string(c.status) << "\n";
  os << "  " << c.message << "\n\n";
  os << "Sup constants on |z| <= " << k.radius << " (sampled, inflated x" << k.safety_factor
     << ", grid " << k.grid_density << " per axis)\n";
  os << "  a1 = " << k.a1 << "  a2 = " << k.a2 << "\n";
  os << "  b1 = " << k.b1 << "  b2 = " << k.b2 << "\n";
  os << "  eta1 = " << k.eta1 << "  eta2 = " << k.eta2 << "\n";
  os << "  theta1 = " << k.theta1 << "  theta2 = " << k.theta2 << "\n\n";
  os << "Rates: alpha1 = " << cert.alpha1 << ", alpha2 = " << cert.alpha2
     << ", target alpha = " << cert.alpha << "\n";
  os << "Slack: eps = (" << cert.slack.eps[0] << ", " << cert.slack.eps[1] << ", "
     << cert.slack.eps[2] << ", " << cert.slack.eps[3] << ")\n";
  os << "Gain budget: rho1 <= " << cert.rho1_max << ", rho2 <= " << cert.rho2_max << "\n\n";
  os << "x-block " << c.component1.summary() << "\n";
  os << "y-block " << c.component2.summary() << "\n";
  if (c.composite)
    os << "composite at (" << c.checked_rho1 << ", " << c.checked_rho2 << ") "
       << c.composite->summary() << "\n";
  os << "\nSampled checks can refute the inequalities but do not prove them.\n";
}

SmallGainReport isps_smallgain_check(const IspsGainPair &pair, int grid_density) {
  if (!(pair.r0 > 0.0) || !(pair.r0 < pair.r_max))
    throw std::invalid_argument("isps_smallgain_check: need 0 < r0 < r_max");
  if (grid_density < 1) throw std::invalid_argument("isps_smallgain_check: grid_density must be positive");
  SmallGainReport rep;
  rep.worst_ratio = -kInf;
  rep.gains_monotone = pair.chi_x(0.0) == 0.0 && pair.chi_y(0.0) == 0.0;
  double prev_x = 0.0;
  double prev_y = 0.0;
  bool ok = true;
  for (int i = 1; i <= grid_density; ++i) {
    const double r = pair.r0 + (pair.r_max - pair.r0) * static_cast<double>(i) / grid_density;
    const double cy = pair.chi_y(r);
    const double cx = pair.chi_x(r);
    if (cx < prev_x || cy < prev_y) rep.gains_monotone = false;
    prev_x = cx;
    prev_y = cy;
    const double composed = pair.chi_x(cy);
    const double ratio = composed / r;
    if (ratio > rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.worst_r = r;
    }
    if (!(composed <= r)) ok = false;
  }
  rep.passed = ok;
  return rep;
}

}  // namespace incstab
