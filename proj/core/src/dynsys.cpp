#include "incstab/dynsys.hpp"

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace incstab {

namespace odeint = boost::numeric::odeint;

namespace {

using Rhs = std::function<void(const Vector &, Vector &, double)>;

void require(bool ok, const std::string &what) {
  if (!ok) throw DimensionError(what);
}

void check_field(const TimeVaryingField &f, const std::string &name) {
  require(f.dim > 0, name + ": dimension must be positive");
  require(static_cast<bool>(f.eval), name + ": missing eval");
  require(static_cast<bool>(f.jacobian), name + ": missing jacobian");
}

void check_coupling(const CouplingMap &g, int in, int out, const std::string &name) {
  require(static_cast<bool>(g.eval) && static_cast<bool>(g.jacobian),
          name + ": missing eval or jacobian");
  require(g.input_dim == in, name + ": input dimension " + std::to_string(g.input_dim) +
                                 " does not match the other block (" + std::to_string(in) + ")");
  require(g.output_dim == out, name + ": output dimension " + std::to_string(g.output_dim) +
                                   " does not match its own block (" + std::to_string(out) + ")");
}

struct RawSolution {
  std::vector<double> times;
  std::vector<Vector> samples;
  std::vector<Vector> rates;
  bool blow_up = false;
  double blow_up_time = 0.0;
};

void record(RawSolution &sol, const Rhs &rhs, double t, const Vector &y, bool dense) {
  sol.times.push_back(t);
  sol.samples.push_back(y);
  if (dense) {
    Vector dy(y.size());
    rhs(y, dy, t);
    sol.rates.push_back(std::move(dy));
  }
}

RawSolution run_fixed(const Rhs &rhs, double t0, Vector y, const IntegratorConfig &cfg) {
  using Stepper = odeint::runge_kutta4<Vector, double, Vector, double, odeint::vector_space_algebra>;
  Stepper stepper;
  RawSolution sol;
  const double horizon = cfg.max_time;
  const double h = cfg.step;
  // Integer step count; the final step is shortened so the grid ends exactly at t0 + horizon.
  const auto full = static_cast<long>(std::floor(horizon / h + 1e-9));
  const double rest = horizon - static_cast<double>(full) * h;
  const bool partial = rest > 1e-12 * std::max(1.0, horizon);
  const long steps = full + (partial ? 1 : 0);

  sol.times.reserve(steps + 1);
  sol.samples.reserve(steps + 1);
  record(sol, rhs, t0, y, cfg.dense_output);
  double t = t0;
  for (long k = 0; k < steps; ++k) {
    const double t_next = (k + 1 == steps) ? t0 + horizon : t0 + static_cast<double>(k + 1) * h;
    stepper.do_step(rhs, y, t, t_next - t);
    if (!y.allFinite()) {
      sol.blow_up = true;
      sol.blow_up_time = t_next;
      return sol;
    }
    t = t_next;
    record(sol, rhs, t, y, cfg.dense_output);
  }
  return sol;
}

RawSolution run_adaptive(const Rhs &rhs, double t0, Vector y, const IntegratorConfig &cfg) {
  using Base =
      odeint::runge_kutta_dopri5<Vector, double, Vector, double, odeint::vector_space_algebra>;
  auto stepper = odeint::make_controlled(cfg.abs_tol, cfg.rel_tol, Base());
  RawSolution sol;
  const double t_end = t0 + cfg.max_time;
  double t = t0;
  double dt = std::min(cfg.step, cfg.max_time);
  record(sol, rhs, t, y, cfg.dense_output);
  long attempts = 0;
  while (t < t_end) {
    if (++attempts > cfg.max_steps) {
      sol.blow_up = true;
      sol.blow_up_time = t;
      return sol;
    }
    const bool last = t + dt >= t_end;
    double trial = last ? t_end - t : dt;
    Vector y_try = y;
    double t_try = t;
    const auto result = stepper.try_step(rhs, y_try, t_try, trial);
    if (result == odeint::success) {
      if (!y_try.allFinite()) {
        sol.blow_up = true;
        sol.blow_up_time = t_try;
        return sol;
      }
      y = std::move(y_try);
      t = last ? t_end : t_try;
      // try_step proposes the next step in `trial`.
      if (!last) dt = trial;
      record(sol, rhs, t, y, cfg.dense_output);
    } else {
      dt = trial;
      if (!std::isfinite(dt) || dt <= 1e-14 * std::max(1.0, std::abs(t))) {
        sol.blow_up = true;
        sol.blow_up_time = t;
        return sol;
      }
    }
  }
  return sol;
}

RawSolution solve(const Rhs &rhs, double t0, const Vector &y0, const IntegratorConfig &cfg) {
  cfg.validate();
  if (!y0.allFinite()) throw std::invalid_argument("integrate: initial condition is not finite");
  return cfg.method == IntegratorMethod::fixed_rk4 ? run_fixed(rhs, t0, y0, cfg)
                                                   : run_adaptive(rhs, t0, y0, cfg);
}

// Locates the sample interval [i, i+1] containing t (clamped to the stored range).
std::size_t bracket(const std::vector<double> &times, double t) {
  if (times.size() < 2 || t <= times.front()) return 0;
  if (t >= times.back()) return times.size() - 2;
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
}

Vector interpolate(const std::vector<double> &times, const std::vector<Vector> &values,
                   const std::vector<Vector> &rates, double t) {
  if (values.empty()) throw std::out_of_range("trajectory has no samples");
  if (values.size() == 1) return values.front();
  const std::size_t i = bracket(times, t);
  const double ta = times[i];
  const double tb = times[i + 1];
  if (t == ta) return values[i];
  if (t == tb) return values[i + 1];
  const double h = tb - ta;
  const double s = (t - ta) / h;
  if (rates.size() != values.size()) return (1.0 - s) * values[i] + s * values[i + 1];
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * values[i] + h10 * h * rates[i] + h01 * values[i + 1] + h11 * h * rates[i + 1];
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(max_time > 0.0) || !std::isfinite(max_time))
    throw std::invalid_argument("integrator: horizon must be positive and finite");
  if (!(step > 0.0) || !std::isfinite(step))
    throw std::invalid_argument("integrator: step must be positive");
  if (method == IntegratorMethod::fixed_rk4) {
    if (max_time / step < 2.0 - 1e-12)
      throw std::invalid_argument("integrator: fixed step must split the horizon into at least 2 steps");
  } else {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
      throw std::invalid_argument("integrator: adaptive tolerances must be strictly positive");
  }
}

std::pair<Vector, Vector> split_state(const Vector &z, int n) {
  return {z.head(n), z.tail(z.size() - n)};
}

Vector join_state(const Vector &x, const Vector &y) {
  Vector z(x.size() + y.size());
  z << x, y;
  return z;
}

TimeVaryingField assemble(const Interconnection &ic) {
  check_field(ic.f1, "f1");
  check_field(ic.f2, "f2");
  const int n = ic.n();
  const int m = ic.m();
  check_coupling(ic.g1, m, n, "g1");
  check_coupling(ic.g2, n, m, "g2");
  if (!(ic.rho1 >= 0.0) || !(ic.rho2 >= 0.0))
    throw std::invalid_argument("interconnection gains must be nonnegative");

  TimeVaryingField out;
  out.dim = n + m;
  out.eval = [ic, n, m](double t, const Vector &z) {
    const Vector x = z.head(n);
    const Vector y = z.tail(m);
    Vector dz(n + m);
    dz.head(n) = ic.f1.eval(t, x) + ic.rho1 * ic.g1.eval(y);
    dz.tail(m) = ic.f2.eval(t, y) + ic.rho2 * ic.g2.eval(x);
    return dz;
  };
  out.jacobian = [ic, n, m](double t, const Vector &z) {
    const Vector x = z.head(n);
    const Vector y = z.tail(m);
    Matrix jac(n + m, n + m);
    jac.topLeftCorner(n, n) = ic.f1.jacobian(t, x);
    jac.topRightCorner(n, m) = ic.rho1 * ic.g1.jacobian(y);
    jac.bottomLeftCorner(m, n) = ic.rho2 * ic.g2.jacobian(x);
    jac.bottomRightCorner(m, m) = ic.f2.jacobian(t, y);
    return jac;
  };
  return out;
}

Vector AugmentedTrajectory::state_at(double t) const {
  return interpolate(times, states, state_rates, t);
}

Vector AugmentedTrajectory::displacement_at(double t) const {
  if (!has_displacements()) throw std::logic_error("trajectory carries no displacements");
  return interpolate(times, displacements, displacement_rates, t);
}

AugmentedTrajectory integrate(const TimeVaryingField &field, double t0, const Vector &z0,
                              const IntegratorConfig &config) {
  if (z0.size() != field.dim)
    throw DimensionError("integrate: initial condition has dimension " +
                         std::to_string(z0.size()) + ", field has " + std::to_string(field.dim));
  const Rhs rhs = [&field](const Vector &z, Vector &dz, double t) { dz = field.eval(t, z); };
  RawSolution sol = solve(rhs, t0, z0, config);

  AugmentedTrajectory traj;
  traj.t0 = t0;
  traj.step = config.step;
  traj.times = std::move(sol.times);
  traj.states = std::move(sol.samples);
  traj.state_rates = std::move(sol.rates);
  traj.blow_up = sol.blow_up;
  traj.blow_up_time = sol.blow_up_time;
  return traj;
}

AugmentedTrajectory integrate_with_displacement(const TimeVaryingField &field, double t0,
                                                const Vector &z0, const Vector &d0,
                                                const IntegratorConfig &config) {
  const int dim = field.dim;
  if (z0.size() != dim || d0.size() != dim)
    throw DimensionError("integrate_with_displacement: state and displacement must have dimension " +
                         std::to_string(dim));
  const Rhs rhs = [&field, dim](const Vector &w, Vector &dw, double t) {
    const Vector z = w.head(dim);
    dw.resize(2 * dim);
    dw.head(dim) = field.eval(t, z);
    dw.tail(dim) = field.jacobian(t, z) * w.tail(dim);
  };
  RawSolution sol = solve(rhs, t0, join_state(z0, d0), config);

  AugmentedTrajectory traj;
  traj.t0 = t0;
  traj.step = config.step;
  traj.times = std::move(sol.times);
  traj.blow_up = sol.blow_up;
  traj.blow_up_time = sol.blow_up_time;
  const std::size_t count = sol.samples.size();
  traj.states.reserve(count);
  traj.displacements.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    traj.states.emplace_back(sol.samples[i].head(dim));
    traj.displacements.emplace_back(sol.samples[i].tail(dim));
    if (!sol.rates.empty()) {
      traj.state_rates.emplace_back(sol.rates[i].head(dim));
      traj.displacement_rates.emplace_back(sol.rates[i].tail(dim));
    }
  }
  return traj;
}

DistanceSeries flow_difference(const AugmentedTrajectory &a, const AugmentedTrajectory &b) {
  DistanceSeries out;
  out.blow_up = a.blow_up || b.blow_up;
  if (a.times.empty() || b.times.empty()) return out;
  if (a.times == b.times) {
    out.times = a.times;
    out.distance.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      out.distance.push_back((a.states[i] - b.states[i]).norm());
    return out;
  }
  const double t_end = std::min(a.t_end(), b.t_end());
  std::vector<double> grid;
  grid.reserve(a.size() + b.size());
  std::merge(a.times.begin(), a.times.end(), b.times.begin(), b.times.end(),
             std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double t : grid) {
    if (t > t_end) break;
    out.times.push_back(t);
    out.distance.push_back((a.state_at(t) - b.state_at(t)).norm());
  }
  return out;
}

DistanceSeries flow_difference(const TimeVaryingField &field, double t0, const Vector &z1,
                               const Vector &z2, const IntegratorConfig &config) {
  if (z1.size() != z2.size())
    throw DimensionError("flow_difference: initial conditions differ in dimension");
  return flow_difference(integrate(field, t0, z1, config), integrate(field, t0, z2, config));
}

}  // namespace incstab
