#pragma once

#include "incstab/dynsys.hpp"
#include "incstab/finsler.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace incstab::fhn {

/// Parameters of the coupled FitzHugh-Nagumo model
///
///   x'       = x - x^3/3 + c - rho1 y
///   eps y'   = -b y + rho2 x
///
/// plus the decay rate `alpha` used to build the weight f_c.
struct FhnParams {
  double b = 0.1;
  double rho1 = 1.0;
  double rho2 = 1.0;
  double epsilon = 1.0;
  double c = 1.0;
  double alpha = 1.0;
  /// Set when the offset was derived as c = r^3 - r.
  std::optional<double> r;

  /// c = r^3 - r with the model constraints r > 2 and 0 < alpha < 2 r^2 - 2.
  static FhnParams from_r(double r, double alpha, double b, double epsilon, double rho1,
                          double rho2);

  /// sqrt((2 + alpha) / 2), the edge of the non-constant part of f_c.
  double plateau_edge() const;
  /// r if given, otherwise the root r > 1 of r^3 - r = c (requires c > 0).
  double effective_r() const;

  /// Positivity of b and epsilon, nonnegativity of the gains.
  void validate() const;
};

/// Caption parameters of the three reproduced figures (1, 2 or 3), alpha = 1.
FhnParams figure_params(int figure);

Interconnection fhn_field(const FhnParams &p);

/// (2 s^2 - 2 - alpha) / (s - s^3/3 + c).
double fc_integrand(const FhnParams &p, double s);

struct QuadratureConfig {
  double abs_tol = 1e-10;
  unsigned max_depth = 30;
  int table_points = 2048;
};

/// Adaptive Gauss-Kronrod (7/15) integral of fc_integrand over [a, b].
double integrate_fc_exponent(const FhnParams &p, double a, double b, double rel_tol,
                             unsigned max_depth, double *error_estimate = nullptr);

/// Tabulated C^1 weight
///
///   f_c(x) = exp(int_{s*}^{x} fc_integrand),  |x| < s*
///          = 1                                 x >= s*
///          = e^mu                              x <= -s*
///
/// on a Chebyshev-Lobatto grid with cubic Hermite interpolation.
struct FcTable {
  FhnParams params;
  double s_star = 0.0;
  double mu = 0.0;
  double eta = 0.0;
  double eta_location = 0.0;
  /// max of the Kronrod estimate for mu and the gap between the cumulative
  /// table integral and the direct value of mu.
  double quadrature_error = 0.0;
  std::vector<double> grid;    // ascending, grid.front() = -s*, grid.back() = s*
  std::vector<double> values;  // f_c at grid
  std::vector<double> slopes;  // f_c' at grid

  double fc(double x) const;
  /// fc_integrand(x) * f_c(x) inside (-s*, s*), 0 outside.
  double fc_prime(double x) const;
};

/// Throws std::invalid_argument when alpha is outside (0, 2 r^2 - 2) or the
/// denominator s - s^3/3 + c vanishes on [-s*, s*].
FcTable build_fc(const FhnParams &p, const QuadratureConfig &cfg = {});

/// f_c(x) by a direct quadrature, bypassing the table.
double fc_direct(const FhnParams &p, double x, double rel_tol = 1e-13);

/// V1(x, dx) = f_c(x) dx^2 with c_lower = 1, c_upper = e^mu.
FinslerCandidate v1_candidate(std::shared_ptr<const FcTable> table);
/// V2(y, dy) = dy^2 / 2.
FinslerCandidate v2_candidate();

/// gamma1 = |f_c'|, zeta1 = 2 f_c.
AssumptionTwoBounds v1_bounds(std::shared_ptr<const FcTable> table);
/// gamma2 = 0, zeta2 = 1.
AssumptionTwoBounds v2_bounds();

/// Component rates in the |d.|^2 form: V1' <= -alpha |dx|^2, V2' <= -(b/eps) |dy|^2.
double v1_rate(const FcTable &table);
double v2_rate(const FhnParams &p);

struct CompositeBound {
  double coef_dx = 0.0;
  double coef_dy = 0.0;
  /// Both coefficients negative.
  bool concludes_ies = false;
};

/// Coefficients of the post-transient bound on the composite V' for unit gains:
///   coef_dx = -alpha + eta sqrt((1/b)(1 + c^2/4) + M/eps) + e^mu/eps + 1/2
///   coef_dy = -b/eps + eps e^mu + 1/2
/// Requires b > eps and rho1 = rho2 = 1.
CompositeBound composite_vdot_bound(const FhnParams &p, const FcTable &table, double margin_m);

}  // namespace incstab::fhn
