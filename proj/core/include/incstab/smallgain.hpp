#pragma once

#include "incstab/dynsys.hpp"
#include "incstab/finsler.hpp"
#include "incstab/keyvalue.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace incstab {

/// Suprema over the ball of radius R used to bound the coupling terms of the
/// composite V'. Values are sampled maxima inflated by `safety_factor`.
struct SupConstants {
  double radius = 0.0;
  double a1 = 0.0;      // sup |g1(y)|, |y| <= R
  double a2 = 0.0;      // sup |g2(x)|, |x| <= R
  double b1 = 0.0;      // sup |dg1/dy|
  double b2 = 0.0;      // sup |dg2/dx|
  double eta1 = 0.0;    // sup gamma1
  double eta2 = 0.0;    // sup gamma2
  double theta1 = 0.0;  // sup zeta1
  double theta2 = 0.0;  // sup zeta2
  double safety_factor = 1.05;
  int grid_density = 0;
};

/// Sup constants on a deterministic per-axis grid of the ball of radius R.
/// Matrix norms are spectral norms. Throws on a non-finite evaluation.
SupConstants extract_constants(const Interconnection &ic, const AssumptionTwoBounds &bounds1,
                               const AssumptionTwoBounds &bounds2, double radius,
                               int grid_density = 201, double safety_factor = 1.05);

struct Slack {
  std::array<double, 4> eps{};  // (eps1, eps2, eps3, eps4)
};

/// eps1 = eps2 = (alpha1 - alpha)/3, eps3 = eps4 = (alpha2 - alpha)/3.
Slack default_slack(double alpha1, double alpha2, double alpha);

struct GainBudget {
  bool feasible = false;
  double rho1_max = 0.0;
  double rho2_max = 0.0;
  std::string reason;
};

/// Admissible gain bounds
///   rho1 <= min(2 eps1 / (2 a1 eta1 + b1 theta1^2), 2 eps4 / b1)
///   rho2 <= min(2 eps3 / (2 a2 eta2 + b2 theta2^2), 2 eps2 / b2)
/// with +inf for a vanishing denominator. Infeasible when alpha >= min(alpha1, alpha2).
/// Throws std::invalid_argument when the slack violates
/// eps1 + eps2 < alpha1 - alpha or eps3 + eps4 < alpha2 - alpha.
GainBudget gain_budget(const SupConstants &k, double alpha1, double alpha2, double alpha,
                       const Slack &slack);

/// Left-hand sides of the two linear conditions
///   -alpha1 + rho1 (a1 eta1 + b1 theta1^2 / 2) + rho2 b2 / 2
///   -alpha2 + rho2 (a2 eta2 + b2 theta2^2 / 2) + rho1 b1 / 2
/// each of which must be <= -alpha.
std::pair<double, double> gain_conditions(const SupConstants &k, double alpha1, double alpha2,
                                          double rho1, double rho2);

struct GainCertificate {
  SupConstants constants;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double alpha = 0.0;
  Slack slack;
  double rho1_max = 0.0;
  double rho2_max = 0.0;
};

enum class CertificationStatus {
  certified,
  component_check_failed,
  infeasible_budget,
  requested_gain_exceeds_budget,
  composite_check_failed,
};

const char *to_string(CertificationStatus s);

struct CertifyRequest {
  double radius = 0.0;
  double alpha1 = 0.0;  // component rate, V1' <= -alpha1 |dx|^2
  double alpha2 = 0.0;  // component rate, V2' <= -alpha2 |dy|^2
  double alpha = 0.0;   // target composite rate
  std::optional<Slack> slack;
  /// Gains the caller wants to use; they must fit within the budget.
  std::optional<std::pair<double, double>> requested_gains;
  int grid_density = 201;
  double safety_factor = 1.05;
  std::size_t decay_samples = 4000;
  InequalityTolerance tolerance;
  double t = 0.0;
};

struct Certification {
  CertificationStatus status = CertificationStatus::component_check_failed;
  GainCertificate certificate;
  DecayReport component1;
  DecayReport component2;
  std::optional<DecayReport> composite;
  /// Gains at which the composite check was run.
  double checked_rho1 = 0.0;
  double checked_rho2 = 0.0;
  std::string message;

  bool passed() const { return status == CertificationStatus::certified; }
};

/// Checks both component decay conditions on the ball of radius R, extracts
/// sup constants, computes the gain budget, and runs the composite decay
/// check (V' + alpha |dz|^2 <= tol) on the assembled field at the budget
/// maxima (or at the requested gains). Infinite budget entries only occur when
/// the corresponding coupling constants vanish; the check then uses gain 1.
Certification certify(const Interconnection &ic, const FinslerCandidate &cand1,
                      const FinslerCandidate &cand2, const AssumptionTwoBounds &bounds1,
                      const AssumptionTwoBounds &bounds2, const CertifyRequest &req);

/// Machine-readable record: sections [certificate], [constants], [budget],
/// [checks]. Constants are labelled as sampled and inflated.
KeyValueDocument certificate_record(const Certification &c);
/// Human-readable report of the same content.
void write_certificate_report(std::ostream &os, const Certification &c);

/// Monotone gain pair of the ISpS small-gain condition chi_x(chi_y(r)) <= r, r > r0.
struct IspsGainPair {
  std::function<double(double)> chi_x;
  std::function<double(double)> chi_y;
  double r0 = 0.0;
  double r_max = 0.0;
};

struct SmallGainReport {
  bool passed = false;
  double worst_ratio = 0.0;  // max chi_x(chi_y(r)) / r on the grid
  double worst_r = 0.0;
  bool gains_monotone = true;
};

/// Evaluates the composition on `grid_density` points in (r0, r_max].
SmallGainReport isps_smallgain_check(const IspsGainPair &pair, int grid_density = 1000);

}  // namespace incstab
