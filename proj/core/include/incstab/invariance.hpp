#pragma once

#include "incstab/dynsys.hpp"
#include "incstab/fhn.hpp"
#include "incstab/keyvalue.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>

namespace incstab {

/// Outer Lyapunov candidate W(t, z) with class bounds
///   lower(|z|) <= W(t, z) <= upper(|z|),   W' <= -alpha3(|z|) for |z| >= mu.
struct OuterLyapunov {
  std::function<double(double, const Vector &)> value;
  std::function<Vector(double, const Vector &)> grad;
  std::function<double(double, const Vector &)> grad_t;  // may be empty (autonomous W)
  std::function<double(double)> lower;
  std::function<double(double)> upper;
  double mu = 0.0;
  std::function<double(double)> alpha3;
};

/// |z|^2 / 2 with class bounds s^2/2.
OuterLyapunov half_squared_norm();

/// W(x, y) = (x^2 + eps y^2) / 2 for the FitzHugh-Nagumo model.
OuterLyapunov fhn_outer_lyapunov(const fhn::FhnParams &p);

/// dW/dt + dW/dz . f(t, z).
double wdot(const OuterLyapunov &w, const TimeVaryingField &field, double t, const Vector &z);

/// Sampled check of the class bounds and of W' <= -alpha3(|z|) for |z| >= mu.
struct OuterLyapunovReport {
  std::size_t samples = 0;
  double worst_sandwich = 0.0;  // min over samples of min(W - lower, upper - W)
  double worst_decay = 0.0;     // max over |z| >= mu of W' + alpha3(|z|)
  bool passed = false;
};

OuterLyapunovReport check_outer_lyapunov(const OuterLyapunov &w, const TimeVaryingField &field,
                                         double t, const std::vector<Vector> &states,
                                         double slack = 1e-9);

struct DissipationChainReport {
  std::size_t grid_points = 0;
  /// Worst (largest) value of lhs - rhs for each of the three inequalities.
  std::array<double, 3> worst_excess{};
  std::array<Vector, 3> worst_location;
  bool passed = false;
};

/// Checks, on a (points x points) grid over [-half_width, half_width]^2,
///   W' <= 3/2 x^2 - x^4/3 + c^2/2 - b y^2
///      <= -x^2/8 - b y^2 + 2 + c^2/2
///      <= -2 min(1/8, b/eps) W + 2 + c^2/2
/// for W = (x^2 + eps y^2)/2. Requires rho1 = rho2.
DissipationChainReport check_dissipation_chain_fhn(const fhn::FhnParams &p, double half_width = 6.0,
                                                   int points = 201, double tolerance = 1e-9);

struct InvariantSearch {
  double level_min = 1e-2;
  double level_max = 1e3;
  int level_count = 80;      // geometric grid of candidate levels
  int grid_density = 101;    // per-axis state grid, rebuilt for each level
  double shell_width = 0.05; // shell {L <= W <= L (1 + width)}
  double t = 0.0;
};

struct InvariantSetEstimate {
  bool found = false;
  double level = 0.0;
  double radius = 0.0;   // sampled max |z| on {W <= L} plus one grid diagonal
  double margin = 0.0;   // max sampled W' on the shell; negative when found
  std::size_t shell_points = 0;
  int grid_density = 0;
  double grid_spacing = 0.0;
  std::string message;
};

/// Smallest candidate level whose sampled shell has W' < 0 everywhere.
InvariantSetEstimate find_invariant_level(const OuterLyapunov &w, const TimeVaryingField &field,
                                          const InvariantSearch &search = {});

/// Report record with level, radius, margin and grid resolution.
KeyValueDocument invariant_set_record(const InvariantSetEstimate &est);

struct UltimateBound {
  double bound = 0.0;  // (eps/b)(1 + c^2/4) + M
};

/// Requires b > eps and M > 0.
UltimateBound ultimate_bound_fhn(const fhn::FhnParams &p, double margin_m);

/// First sample time after which eps y(t)^2 <= bound for the rest of the
/// trajectory, if any. The state layout is z = (x, y).
std::optional<double> ultimate_bound_entry_time(const AugmentedTrajectory &traj,
                                                const fhn::FhnParams &p, double bound);

/// W(t) <= (W(0) - W_inf) e^{-2 kappa t} + W_inf with kappa = min(1/8, b/eps),
/// W_inf = (2 + c^2/2) / (2 kappa).
double fhn_comparison_envelope(const fhn::FhnParams &p, double w0, double elapsed);

}  // namespace incstab
