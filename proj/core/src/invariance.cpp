#include "incstab/invariance.hpp"

#include "incstab/sampling.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace incstab {

namespace {

// Inverse of a class-K function by bracketing and bisection.
double invert_class_k(const std::function<double(double)> &fn, double target) {
  double hi = 1.0;
  while (fn(hi) < target) {
    hi *= 2.0;
    if (hi > 1e12) throw std::domain_error("class-K lower bound does not reach the requested level");
  }
  boost::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::bisect(
      [&](double s) { return fn(s) - target; }, 0.0, hi,
      [](double u, double v) { return std::abs(v - u) <= 1e-12 * (1.0 + std::abs(u)); }, iters);
  return b;
}

}  // namespace

OuterLyapunov half_squared_norm() {
  OuterLyapunov w;
  w.value = [](double, const Vector &z) { return 0.5 * z.squaredNorm(); };
  w.grad = [](double, const Vector &z) -> Vector { return z; };
  w.lower = [](double s) { return 0.5 * s * s; };
  w.upper = [](double s) { return 0.5 * s * s; };
  return w;
}

OuterLyapunov fhn_outer_lyapunov(const fhn::FhnParams &p) {
  const double eps = p.epsilon;
  OuterLyapunov w;
  w.value = [eps](double, const Vector &z) { return 0.5 * (z[0] * z[0] + eps * z[1] * z[1]); };
  w.grad = [eps](double, const Vector &z) {
    Vector g(2);
    g << z[0], eps * z[1];
    return g;
  };
  const double lo = std::min(1.0, eps);
  const double hi = std::max(1.0, eps);
  w.lower = [lo](double s) { return 0.5 * lo * s * s; };
  w.upper = [hi](double s) { return 0.5 * hi * s * s; };
  return w;
}

double wdot(const OuterLyapunov &w, const TimeVaryingField &field, double t, const Vector &z) {
  const double dt = w.grad_t ? w.grad_t(t, z) : 0.0;
  return dt + w.grad(t, z).dot(field.eval(t, z));
}

OuterLyapunovReport check_outer_lyapunov(const OuterLyapunov &w, const TimeVaryingField &field,
                                         double t, const std::vector<Vector> &states,
                                         double slack) {
  if (states.empty()) throw std::invalid_argument("check_outer_lyapunov: empty sample set");
  OuterLyapunovReport rep;
  rep.samples = states.size();
  rep.worst_sandwich = std::numeric_limits<double>::infinity();
  rep.worst_decay = -std::numeric_limits<double>::infinity();
  bool ok = true;
  for (const auto &z : states) {
    const double r = z.norm();
    const double v = w.value(t, z);
    const double sandwich = std::min(v - w.lower(r), w.upper(r) - v);
    rep.worst_sandwich = std::min(rep.worst_sandwich, sandwich);
    if (sandwich < -slack * (1.0 + std::abs(v))) ok = false;
    if (r >= w.mu && w.alpha3) {
      const double excess = wdot(w, field, t, z) + w.alpha3(r);
      rep.worst_decay = std::max(rep.worst_decay, excess);
      if (excess > slack * (1.0 + std::abs(v))) ok = false;
    }
  }
  rep.passed = ok;
  return rep;
}

DissipationChainReport check_dissipation_chain_fhn(const fhn::FhnParams &p, double half_width,
                                                   int points, double tolerance) {
  p.validate();
  if (p.rho1 != p.rho2)
    throw std::invalid_argument("dissipation chain: the cross terms cancel only for rho1 = rho2");
  const TimeVaryingField field = assemble(fhn::fhn_field(p));
  const OuterLyapunov w = fhn_outer_lyapunov(p);
  const double b = p.b;
  const double c2 = p.c * p.c;
  const double kappa = std::min(0.125, b / p.epsilon);

  DissipationChainReport rep;
  rep.worst_excess.fill(-std::numeric_limits<double>::infinity());
  bool ok = true;
  for (const auto &z : box_grid(2, half_width, points)) {
    const double x = z[0];
    const double y = z[1];
    const double x2 = x * x;
    const double y2 = y * y;
    const std::array<double, 4> chain = {
        wdot(w, field, 0.0, z),
        1.5 * x2 - x2 * x2 / 3.0 + c2 / 2.0 - b * y2,
        -x2 / 8.0 - b * y2 + 2.0 + c2 / 2.0,
        -2.0 * kappa * w.value(0.0, z) + 2.0 + c2 / 2.0,
    };
    for (std::size_t i = 0; i < 3; ++i) {
      const double excess = chain[i] - chain[i + 1];
      if (excess > rep.worst_excess[i]) {
        rep.worst_excess[i] = excess;
        rep.worst_location[i] = z;
      }
      if (excess > tolerance) ok = false;
    }
    ++rep.grid_points;
  }
  rep.passed = ok;
  return rep;
}

InvariantSetEstimate find_invariant_level(const OuterLyapunov &w, const TimeVaryingField &field,
                                          const InvariantSearch &search) {
  if (!(search.level_min > 0.0) || !(search.level_max > search.level_min) || search.level_count < 1)
    throw std::invalid_argument("find_invariant_level: need 0 < level_min < level_max");
  if (!w.lower) throw std::invalid_argument("find_invariant_level: W needs a class-K lower bound");
  const int dim = field.dim;
  const double diag = std::sqrt(static_cast<double>(dim));

  InvariantSetEstimate est;
  est.grid_density = search.grid_density;
  const double ratio = search.level_count > 1
                           ? std::pow(search.level_max / search.level_min, 1.0 / (search.level_count - 1))
                           : 1.0;
  double level = search.level_min;
  for (int k = 0; k < search.level_count; ++k, level *= ratio) {
    const double outer = level * (1.0 + search.shell_width);
    const double half = invert_class_k(w.lower, outer);
    const double spacing = 2.0 * half / (search.grid_density - 1);
    std::size_t shell = 0;
    double margin = -std::numeric_limits<double>::infinity();
    double radius = 0.0;
    bool rejected = false;
    for (const auto &z : box_grid(dim, half, search.grid_density)) {
      const double v = w.value(search.t, z);
      if (v <= level) radius = std::max(radius, z.norm());
      if (v < level || v > outer) continue;
      ++shell;
      const double rate = wdot(w, field, search.t, z);
      margin = std::max(margin, rate);
      if (!(rate < 0.0)) {
        rejected = true;
        break;
      }
    }
    if (rejected || shell == 0) continue;
    est.found = true;
    est.level = level;
    est.radius = radius + spacing * diag;
    est.margin = margin;
    est.shell_points = shell;
    est.grid_spacing = spacing;
    est.message = "W' < 0 at every sampled shell point (no violation found)";
    return est;
  }
  est.message = "no level in range has W' < 0 on its sampled shell";
  return est;
}

KeyValueDocument invariant_set_record(const InvariantSetEstimate &est) {
  KeyValueDocument doc;
  auto &s = doc.section("invariant_set");
  s.set("found", est.found ? "true" : "false");
  s.set("level", est.level);
  s.set("radius", est.radius);
  s.set("margin", est.margin);
  s.set("shell_points", static_cast<double>(est.shell_points));
  s.set("grid_density", static_cast<double>(est.grid_density));
  s.set("grid_spacing", est.grid_spacing);
  s.set("message", est.message);
  return doc;
}

UltimateBound ultimate_bound_fhn(const fhn::FhnParams &p, double margin_m) {
  p.validate();
  if (!(p.b > p.epsilon)) throw std::invalid_argument("ultimate bound: requires b > epsilon");
  if (!(margin_m > 0.0)) throw std::invalid_argument("ultimate bound: M must be positive");
  return {(p.epsilon / p.b) * (1.0 + p.c * p.c / 4.0) + margin_m};
}

std::optional<double> ultimate_bound_entry_time(const AugmentedTrajectory &traj,
                                                const fhn::FhnParams &p, double bound) {
  if (traj.size() == 0) return std::nullopt;
  for (std::size_t i = traj.size(); i-- > 0;) {
    const double y = traj.states[i][1];
    if (p.epsilon * y * y > bound) {
      if (i + 1 == traj.size()) return std::nullopt;
      return traj.times[i + 1];
    }
  }
  return traj.times.front();
}

double fhn_comparison_envelope(const fhn::FhnParams &p, double w0, double elapsed) {
  const double kappa = std::min(0.125, p.b / p.epsilon);
  const double w_inf = (2.0 + p.c * p.c / 2.0) / (2.0 * kappa);
  return (w0 - w_inf) * std::exp(-2.0 * kappa * elapsed) + w_inf;
}

}  // namespace incstab
