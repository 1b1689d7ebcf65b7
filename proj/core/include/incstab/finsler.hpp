#pragma once

#include "incstab/dynsys.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace incstab {

using StateDispFn = std::function<double(const Vector &, const Vector &)>;
using StateDispGrad = std::function<Vector(const Vector &, const Vector &)>;

/// Exponential Finsler-Lyapunov candidate V(z, dz) with its two partial
/// gradients and the quadratic sandwich constants
///   c_lower |dz|^2 <= V(z, dz) <= c_upper |dz|^2.
struct FinslerCandidate {
  int dim = 0;
  StateDispFn value;
  StateDispGrad grad_state;
  StateDispGrad grad_disp;
  double c_lower = 0.0;
  double c_upper = 0.0;
};

/// Central-difference gradients with step 1e-6 * (1 + |arg_i|).
Vector fd_grad_state(const StateDispFn &value, const Vector &z, const Vector &dz);
Vector fd_grad_disp(const StateDispFn &value, const Vector &z, const Vector &dz);

/// Candidate from a bare value function; gradients fall back to central differences.
FinslerCandidate make_candidate(int dim, StateDispFn value, double c_lower, double c_upper);

/// V(z, dz) = dz^T M(z) dz for a C^1 symmetric positive-definite metric.
struct QuadraticMetric {
  int dim = 0;
  std::function<Matrix(const Vector &)> metric;
  /// Partial derivatives dM/dz_k, k = 0..dim-1.
  std::function<std::vector<Matrix>(const Vector &)> metric_partials;
  double c_lower = 0.0;
  double c_upper = 0.0;
};

FinslerCandidate make_quadratic_candidate(const QuadraticMetric &qm);

/// V' computed from M, dM and J_f directly:
///   sum_k f_k dz^T (dM/dz_k) dz + dz^T (M J + J^T M) dz.
double quadratic_vdot(const QuadraticMetric &qm, const TimeVaryingField &field, double t,
                      const Vector &z, const Vector &dz);

/// Sampled (inf lambda_min M, sup lambda_max M); throws if M is not symmetric
/// to 1e-12 relative at a sample.
std::pair<double, double> metric_eigen_bounds(const QuadraticMetric &qm,
                                              const std::vector<Vector> &states);

/// Derivative of V along the augmented system (z' = f, dz' = J_f dz).
double vdot(const FinslerCandidate &cand, const TimeVaryingField &field, double t,
            const Vector &z, const Vector &dz);

/// Absolute slack accepted on each sampled inequality: slack * (1 + |V|).
struct InequalityTolerance {
  double slack = 1e-9;
  double at(double v) const;
};

using StateDispSample = std::pair<Vector, Vector>;

struct DecaySample {
  double t = 0.0;
  Vector z;
  Vector dz;
};

std::vector<DecaySample> at_time(double t, const std::vector<StateDispSample> &samples);

/// Sampled inequality checks can only refute. A passing report means that no
/// violation was found at the tested points.
struct SandwichReport {
  std::size_t samples = 0;
  double worst_lower_margin = 0.0;  // min of V - c_lower |dz|^2
  double worst_upper_margin = 0.0;  // min of c_upper |dz|^2 - V
  std::size_t worst_lower_index = 0;
  std::size_t worst_upper_index = 0;
  bool passed = false;
  std::string summary() const;
};

SandwichReport check_sandwich(const FinslerCandidate &cand,
                              const std::vector<StateDispSample> &samples,
                              InequalityTolerance tol = {});

/// Right-hand side of the decay inequality: -alpha V (Finsler-Lyapunov form)
/// or -alpha |dz|^2 (component assumption form).
enum class DecayForm { relative_to_value, relative_to_norm };

struct DecayReport {
  std::size_t samples = 0;
  double alpha = 0.0;
  DecayForm form = DecayForm::relative_to_value;
  /// max over samples of V' + alpha * (V or |dz|^2).
  double worst_violation = 0.0;
  std::size_t worst_index = 0;
  DecaySample worst_sample;
  bool passed = false;
  std::string summary() const;
};

DecayReport check_decay(const FinslerCandidate &cand, const TimeVaryingField &field, double alpha,
                        const std::vector<DecaySample> &samples,
                        DecayForm form = DecayForm::relative_to_value,
                        InequalityTolerance tol = {});

/// Gradient bounds |dV/dz| <= gamma(z)|dz|^2 and |dV/ddz| <= zeta(z)|dz|.
struct AssumptionTwoBounds {
  std::function<double(const Vector &)> gamma;
  std::function<double(const Vector &)> zeta;
};

struct AssumptionTwoReport {
  std::size_t samples = 0;
  double worst_state_excess = 0.0;  // max of |dV/dz| - gamma |dz|^2
  double worst_disp_excess = 0.0;   // max of |dV/ddz| - zeta |dz|
  std::size_t worst_state_index = 0;
  std::size_t worst_disp_index = 0;
  bool passed = false;
  std::string summary() const;
};

AssumptionTwoReport verify_assumption2(const FinslerCandidate &cand,
                                       const AssumptionTwoBounds &bounds,
                                       const std::vector<StateDispSample> &samples,
                                       InequalityTolerance tol = {});

/// V((x, y), (dx, dy)) = V1(x, dx) + V2(y, dy) with c_lower = min, c_upper = max.
FinslerCandidate compose(const FinslerCandidate &first, const FinslerCandidate &second);

}  // namespace incstab
