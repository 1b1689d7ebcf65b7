#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace incstab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A time-varying vector field f(t, z) and its Jacobian with respect to z.
///
/// Both callables must be pure: every analysis in the library may evaluate
/// them in any order and from several threads.
struct TimeVaryingField {
  int dim = 0;
  std::function<Vector(double, const Vector &)> eval;
  std::function<Matrix(double, const Vector &)> jacobian;
  /// Global Lipschitz constant in z, when one is known.
  std::optional<double> lipschitz_hint;
};

/// Autonomous map used to couple the two blocks of an interconnection.
struct CouplingMap {
  int input_dim = 0;
  int output_dim = 0;
  std::function<Vector(const Vector &)> eval;
  std::function<Matrix(const Vector &)> jacobian;
};

/// Two-block feedback interconnection
///
///   x' = f1(t, x) + rho1 * g1(y)
///   y' = f2(t, y) + rho2 * g2(x)
///
/// with x in R^n and y in R^m.
struct Interconnection {
  TimeVaryingField f1;
  TimeVaryingField f2;
  CouplingMap g1;  // R^m -> R^n
  CouplingMap g2;  // R^n -> R^m
  double rho1 = 0.0;
  double rho2 = 0.0;

  int n() const { return f1.dim; }
  int m() const { return f2.dim; }
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Builds the (n+m)-dimensional field of an interconnection with the block
/// Jacobian [[J_f1, rho1 dg1/dy], [rho2 dg2/dx, J_f2]].
/// Throws DimensionError naming the offending block when shapes disagree.
TimeVaryingField assemble(const Interconnection &ic);

/// Splits z = (x, y) with x of dimension n.
std::pair<Vector, Vector> split_state(const Vector &z, int n);
Vector join_state(const Vector &x, const Vector &y);

enum class IntegratorMethod { fixed_rk4, adaptive_embedded };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::fixed_rk4;
  /// Fixed step for RK4; initial step guess for the adaptive pair.
  double step = 1e-3;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  /// Horizon length, measured from t0.
  double max_time = 10.0;
  /// Cubic Hermite interpolation between samples; linear otherwise.
  bool dense_output = true;
  /// Adaptive runs give up (and flag a blow-up) past this many attempted steps.
  long max_steps = 50'000'000;

  void validate() const;
};

/// Sampled solution of the state (and optionally displacement) dynamics.
struct AugmentedTrajectory {
  double t0 = 0.0;
  double step = 0.0;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> state_rates;
  std::vector<Vector> displacements;
  std::vector<Vector> displacement_rates;
  /// Set when a non-finite value was produced or the adaptive step collapsed;
  /// samples up to the last finite one are kept.
  bool blow_up = false;
  double blow_up_time = 0.0;

  bool has_displacements() const { return !displacements.empty(); }
  std::size_t size() const { return times.size(); }
  double t_end() const { return times.empty() ? t0 : times.back(); }

  /// Interpolated state; exact at stored sample times.
  Vector state_at(double t) const;
  Vector displacement_at(double t) const;
};

AugmentedTrajectory integrate(const TimeVaryingField &field, double t0, const Vector &z0,
                              const IntegratorConfig &config);

/// Integrates (z, dz) jointly under z' = f(t, z), dz' = J_f(t, z) dz.
AugmentedTrajectory integrate_with_displacement(const TimeVaryingField &field, double t0,
                                                const Vector &z0, const Vector &d0,
                                                const IntegratorConfig &config);

struct DistanceSeries {
  std::vector<double> times;
  std::vector<double> distance;
  bool blow_up = false;
};

/// Euclidean distance |phi(t, z1) - phi(t, z2)| on a shared time grid. Fixed-step
/// runs share their grid directly; adaptive runs are resampled on the union of
/// both grids.
DistanceSeries flow_difference(const TimeVaryingField &field, double t0, const Vector &z1,
                               const Vector &z2, const IntegratorConfig &config);

/// Same as above from two already computed trajectories.
DistanceSeries flow_difference(const AugmentedTrajectory &a, const AugmentedTrajectory &b);

}  // namespace incstab
