#include "incstab/fhn.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace incstab::fhn {

namespace {

void require(bool ok, const std::string &what) {
  if (!ok) throw std::invalid_argument(what);
}

double hermite(double xa, double xb, double ya, double yb, double da, double db, double x) {
  const double h = xb - xa;
  const double s = (x - xa) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * ya + (s3 - 2 * s2 + s) * h * da + (-2 * s3 + 3 * s2) * yb +
         (s3 - s2) * h * db;
}

}  // namespace

FhnParams FhnParams::from_r(double r, double alpha, double b, double epsilon, double rho1,
                            double rho2) {
  require(r > 2.0, "r must exceed 2");
  require(alpha > 0.0 && alpha < 2.0 * r * r - 2.0, "alpha must lie in (0, 2 r^2 - 2)");
  FhnParams p;
  p.r = r;
  p.c = r * r * r - r;
  p.alpha = alpha;
  p.b = b;
  p.epsilon = epsilon;
  p.rho1 = rho1;
  p.rho2 = rho2;
  p.validate();
  return p;
}

double FhnParams::plateau_edge() const { return std::sqrt((2.0 + alpha) / 2.0); }

double FhnParams::effective_r() const {
  if (r) return *r;
  require(c > 0.0, "c must be positive to derive r from c = r^3 - r");
  // r^3 - r - c is increasing for r > 1/sqrt(3) and negative at r = 1.
  const auto fn = [this](double x) { return x * x * x - x - c; };
  boost::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::bisect(
      fn, 1.0, std::max(2.0, std::cbrt(c) + 1.0),
      [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::abs(a); }, iters);
  return 0.5 * (lo + hi);
}

void FhnParams::validate() const {
  require(b > 0.0 && std::isfinite(b), "b must be positive");
  require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be positive");
  require(rho1 >= 0.0 && rho2 >= 0.0, "rho1 and rho2 must be nonnegative");
  require(std::isfinite(c), "c must be finite");
  require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
}

FhnParams figure_params(int figure) {
  FhnParams p;
  p.c = 1.0;
  p.alpha = 1.0;
  switch (figure) {
    case 1: p.b = 0.1; p.epsilon = 1.0; p.rho1 = p.rho2 = 1.0; break;
    case 2: p.b = 0.1; p.epsilon = 1.0; p.rho1 = p.rho2 = 0.1; break;
    case 3: p.b = 1.0; p.epsilon = 0.9; p.rho1 = p.rho2 = 1.0; break;
    default: throw std::invalid_argument("figure must be 1, 2 or 3");
  }
  return p;
}

Interconnection fhn_field(const FhnParams &p) {
  p.validate();
  const double c = p.c;
  const double decay = p.b / p.epsilon;
  const double inv_eps = 1.0 / p.epsilon;

  Interconnection ic;
  ic.f1.dim = 1;
  ic.f1.eval = [c](double, const Vector &x) {
    return Vector::Constant(1, x[0] - x[0] * x[0] * x[0] / 3.0 + c);
  };
  ic.f1.jacobian = [](double, const Vector &x) { return Matrix::Constant(1, 1, 1.0 - x[0] * x[0]); };

  ic.f2.dim = 1;
  ic.f2.eval = [decay](double, const Vector &y) { return Vector::Constant(1, -decay * y[0]); };
  ic.f2.jacobian = [decay](double, const Vector &) { return Matrix::Constant(1, 1, -decay); };
  ic.f2.lipschitz_hint = decay;

  ic.g1 = {1, 1, [](const Vector &y) -> Vector { return -y; },
           [](const Vector &) { return Matrix::Constant(1, 1, -1.0); }};
  ic.g2 = {1, 1, [inv_eps](const Vector &x) -> Vector { return inv_eps * x; },
           [inv_eps](const Vector &) { return Matrix::Constant(1, 1, inv_eps); }};
  ic.rho1 = p.rho1;
  ic.rho2 = p.rho2;
  return ic;
}

double fc_integrand(const FhnParams &p, double s) {
  return (2.0 * s * s - 2.0 - p.alpha) / (s - s * s * s / 3.0 + p.c);
}

double integrate_fc_exponent(const FhnParams &p, double a, double b, double rel_tol,
                             unsigned max_depth, double *error_estimate) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double value = gauss_kronrod<double, 15>::integrate(
      [&p](double s) { return fc_integrand(p, s); }, a, b, max_depth, rel_tol, &err);
  if (error_estimate) *error_estimate = err;
  return value;
}

double FcTable::fc(double x) const {
  if (x >= s_star) return 1.0;
  if (x <= -s_star) return std::exp(mu);
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto i = static_cast<std::size_t>(std::distance(grid.begin(), it)) - 1;
  if (x == grid[i]) return values[i];
  return hermite(grid[i], grid[i + 1], values[i], values[i + 1], slopes[i], slopes[i + 1], x);
}

double FcTable::fc_prime(double x) const {
  if (std::abs(x) >= s_star) return 0.0;
  return fc_integrand(params, x) * fc(x);
}

// Near +-s* the integrand vanishes and a relative tolerance cannot be met at
// roundoff; short pieces are capped at this depth instead.
constexpr unsigned kPieceDepth = 10;

FcTable build_fc(const FhnParams &p, const QuadratureConfig &cfg) {
  p.validate();
  const double r = p.effective_r();
  require(p.alpha < 2.0 * r * r - 2.0,
          "alpha must lie in (0, 2 r^2 - 2) with r = " + std::to_string(r));
  // Below c = 2/3 the cubic s - s^3/3 + c has a root near s = -1, inside the window.
  require(p.c > 2.0 / 3.0, "c must exceed 2/3 so that s - s^3/3 + c > 0 on [-s*, s*]");
  require(cfg.table_points >= 8, "f_c table needs at least 8 points");

  FcTable t;
  t.params = p;
  t.s_star = p.plateau_edge();
  const double s = t.s_star;
  const double rel_tol = 1e-13;

  double mu_err = 0.0;
  t.mu = -integrate_fc_exponent(p, -s, s, rel_tol, cfg.max_depth, &mu_err);
  require(mu_err <= cfg.abs_tol, "quadrature of mu did not reach the requested tolerance");

  const auto n = static_cast<std::size_t>(cfg.table_points);
  t.grid.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    t.grid[k] = -s * std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(n - 1));
  t.grid.front() = -s;
  t.grid.back() = s;

  // Cumulative exponent E(x_k) = int_{s*}^{x_k}, accumulated leftwards from s*.
  std::vector<double> exponent(n, 0.0);
  for (std::size_t k = n - 1; k-- > 0;) {
    const double piece = integrate_fc_exponent(p, t.grid[k], t.grid[k + 1], rel_tol,
                                               std::min(cfg.max_depth, kPieceDepth));
    exponent[k] = exponent[k + 1] - piece;
  }
  // Per-piece Kronrod estimates summed over thousands of short pieces are far
  // too pessimistic; the cumulative sum is checked against the direct mu instead.
  t.quadrature_error = std::max(mu_err, std::abs(exponent.front() - t.mu));
  require(t.quadrature_error <= cfg.abs_tol,
          "cumulative f_c quadrature disagrees with the direct value of mu");
  exponent.front() = t.mu;

  t.values.resize(n);
  t.slopes.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    t.values[k] = std::exp(exponent[k]);
    t.slopes[k] = fc_integrand(p, t.grid[k]) * t.values[k];
  }
  t.values.back() = 1.0;
  t.values.front() = std::exp(t.mu);
  t.slopes.front() = 0.0;
  t.slopes.back() = 0.0;

  // eta = -min f_c': scan the nodes, then refine around the best one.
  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (t.slopes[k] < t.slopes[best]) best = k;
  const double lo = t.grid[best == 0 ? 0 : best - 1];
  const double hi = t.grid[std::min(best + 1, n - 1)];
  const auto [x_min, f_min] = boost::math::tools::brent_find_minima(
      [&t](double x) { return t.fc_prime(x); }, lo, hi, 52);
  if (f_min < t.slopes[best]) {
    t.eta = -f_min;
    t.eta_location = x_min;
  } else {
    t.eta = -t.slopes[best];
    t.eta_location = t.grid[best];
  }
  return t;
}

double fc_direct(const FhnParams &p, double x, double rel_tol) {
  const double s = p.plateau_edge();
  if (x >= s) return 1.0;
  const double lower = std::max(x, -s);
  const double exponent = -integrate_fc_exponent(p, lower, s, rel_tol, 2 * kPieceDepth);
  return std::exp(exponent);
}

FinslerCandidate v1_candidate(std::shared_ptr<const FcTable> table) {
  FinslerCandidate cand;
  cand.dim = 1;
  cand.c_lower = 1.0;
  cand.c_upper = std::exp(table->mu);
  cand.value = [table](const Vector &x, const Vector &dx) { return table->fc(x[0]) * dx[0] * dx[0]; };
  cand.grad_state = [table](const Vector &x, const Vector &dx) {
    return Vector::Constant(1, table->fc_prime(x[0]) * dx[0] * dx[0]);
  };
  cand.grad_disp = [table](const Vector &x, const Vector &dx) {
    return Vector::Constant(1, 2.0 * table->fc(x[0]) * dx[0]);
  };
  return cand;
}

FinslerCandidate v2_candidate() {
  FinslerCandidate cand;
  cand.dim = 1;
  cand.c_lower = 0.5;
  cand.c_upper = 0.5;
  cand.value = [](const Vector &, const Vector &dy) { return 0.5 * dy[0] * dy[0]; };
  cand.grad_state = [](const Vector &, const Vector &) { return Vector::Zero(1).eval(); };
  cand.grad_disp = [](const Vector &, const Vector &dy) -> Vector { return dy; };
  return cand;
}

AssumptionTwoBounds v1_bounds(std::shared_ptr<const FcTable> table) {
  return {[table](const Vector &x) { return std::abs(table->fc_prime(x[0])); },
          [table](const Vector &x) { return 2.0 * table->fc(x[0]); }};
}

AssumptionTwoBounds v2_bounds() {
  return {[](const Vector &) { return 0.0; }, [](const Vector &) { return 1.0; }};
}

double v1_rate(const FcTable &table) { return table.params.alpha; }

double v2_rate(const FhnParams &p) { return p.b / p.epsilon; }

CompositeBound composite_vdot_bound(const FhnParams &p, const FcTable &table, double margin_m) {
  require(p.b > p.epsilon, "the composite bound needs b > epsilon");
  require(p.rho1 == 1.0 && p.rho2 == 1.0, "the composite bound is stated for rho1 = rho2 = 1");
  require(margin_m > 0.0, "M must be positive");
  const double e_mu = std::exp(table.mu);
  CompositeBound out;
  out.coef_dx = -table.params.alpha +
                table.eta * std::sqrt((1.0 / p.b) * (1.0 + p.c * p.c / 4.0) + margin_m / p.epsilon) +
                e_mu / p.epsilon + 0.5;
  out.coef_dy = -p.b / p.epsilon + p.epsilon * e_mu + 0.5;
  out.concludes_ies = out.coef_dx < 0.0 && out.coef_dy < 0.0;
  return out;
}

}  // namespace incstab::fhn
