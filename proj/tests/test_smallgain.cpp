#include "incstab/smallgain.hpp"
#include "incstab/fhn.hpp"
#include "incstab/invariance.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

using namespace incstab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TimeVaryingField scalar_linear(double a) {
  TimeVaryingField f;
  f.dim = 1;
  f.eval = [a](double, const Vector &z) -> Vector { return a * z; };
  f.jacobian = [a](double, const Vector &) { return Matrix::Constant(1, 1, a); };
  return f;
}

CouplingMap scalar_coupling(double k) {
  return {1, 1, [k](const Vector &y) -> Vector { return k * y; },
          [k](const Vector &) { return Matrix::Constant(1, 1, k); }};
}

Interconnection linear_pair(double g1, double g2, double rho1, double rho2) {
  Interconnection ic;
  ic.f1 = scalar_linear(-1.0);
  ic.f2 = scalar_linear(-2.0);
  ic.g1 = scalar_coupling(g1);
  ic.g2 = scalar_coupling(g2);
  ic.rho1 = rho1;
  ic.rho2 = rho2;
  return ic;
}

FinslerCandidate half_norm() {
  FinslerCandidate c;
  c.dim = 1;
  c.value = [](const Vector &, const Vector &dz) { return 0.5 * dz.squaredNorm(); };
  c.grad_state = [](const Vector &, const Vector &) -> Vector { return Vector::Zero(1); };
  c.grad_disp = [](const Vector &, const Vector &dz) -> Vector { return dz; };
  c.c_lower = c.c_upper = 0.5;
  return c;
}

AssumptionTwoBounds half_norm_bounds() {
  return {[](const Vector &) { return 0.0; }, [](const Vector &) { return 1.0; }};
}

SupConstants unit_constants() {
  SupConstants k;
  k.a1 = k.a2 = k.b1 = k.b2 = k.eta1 = k.eta2 = k.theta1 = k.theta2 = 1.0;
  return k;
}

SupConstants random_constants(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.01, 10.0);
  SupConstants k;
  k.a1 = u(rng);
  k.a2 = u(rng);
  k.b1 = u(rng);
  k.b2 = u(rng);
  k.eta1 = u(rng);
  k.eta2 = u(rng);
  k.theta1 = u(rng);
  k.theta2 = u(rng);
  return k;
}

struct FhnPipeline {
  fhn::FhnParams params;
  std::shared_ptr<const fhn::FcTable> table;
  InvariantSetEstimate invariant;
};

FhnPipeline fhn_pipeline(int figure) {
  FhnPipeline p;
  p.params = fhn::figure_params(figure);
  p.table = std::make_shared<const fhn::FcTable>(fhn::build_fc(p.params));
  p.invariant = find_invariant_level(fhn_outer_lyapunov(p.params), assemble(fhn::fhn_field(p.params)));
  return p;
}

CertifyRequest fhn_request(const FhnPipeline &p) {
  CertifyRequest req;
  req.radius = p.invariant.radius;
  req.alpha1 = fhn::v1_rate(*p.table);
  req.alpha2 = fhn::v2_rate(p.params);
  req.alpha = 0.5 * std::min(req.alpha1, req.alpha2);
  req.grid_density = 101;
  req.decay_samples = 2000;
  return req;
}

Certification certify_fhn(const FhnPipeline &p, const CertifyRequest &req) {
  return certify(fhn::fhn_field(p.params), fhn::v1_candidate(p.table), fhn::v2_candidate(),
                 fhn::v1_bounds(p.table), fhn::v2_bounds(), req);
}

}  // namespace

TEST(ExtractConstants, LinearCoupling) {
  const auto ic = linear_pair(-1.0, 1.0, 1.0, 1.0);
  const auto k = extract_constants(ic, half_norm_bounds(), half_norm_bounds(), 3.0);
  EXPECT_DOUBLE_EQ(k.a1, 3.0 * 1.05);
  EXPECT_DOUBLE_EQ(k.b1, 1.0 * 1.05);
  EXPECT_DOUBLE_EQ(k.a2, 3.0 * 1.05);
  EXPECT_DOUBLE_EQ(k.b2, 1.05);
  EXPECT_EQ(k.eta1, 0.0);
  EXPECT_DOUBLE_EQ(k.theta1, 1.05);
}

TEST(ExtractConstants, FhnCouplingsAndWeightBounds) {
  const auto p = fhn_pipeline(1);
  const double r = p.invariant.radius;
  const auto k = extract_constants(fhn::fhn_field(p.params), fhn::v1_bounds(p.table), fhn::v2_bounds(), r);
  EXPECT_NEAR(k.a1, r * 1.05, 1e-12);
  EXPECT_NEAR(k.a2, r * 1.05, 1e-12);
  EXPECT_NEAR(k.b1, 1.05, 1e-15);
  EXPECT_NEAR(k.b2, 1.05, 1e-15);
  EXPECT_LE(k.eta1, p.table->eta * 1.05 * (1.0 + 1e-9));
  EXPECT_GE(k.eta1, 0.9 * p.table->eta * 1.05);
  EXPECT_LE(k.theta1, 2.0 * std::exp(p.table->mu) * 1.05 * (1.0 + 1e-12));
  EXPECT_EQ(k.eta2, 0.0);
  EXPECT_DOUBLE_EQ(k.theta2, 1.05);
}

TEST(ExtractConstants, NonFiniteIsRejected) {
  auto ic = linear_pair(-1.0, 1.0, 1.0, 1.0);
  ic.g1.eval = [](const Vector &y) -> Vector { return Vector::Constant(1, 1.0 / (y[0] * 0.0)); };
  EXPECT_THROW(extract_constants(ic, half_norm_bounds(), half_norm_bounds(), 1.0), std::domain_error);
}

TEST(ExtractConstants, MonotoneInRadius) {
  const auto p = fhn_pipeline(3);
  const auto ic = fhn::fhn_field(p.params);
  SupConstants prev;
  for (double r : {0.5, 1.0, 2.0, 4.0}) {
    const auto k = extract_constants(ic, fhn::v1_bounds(p.table), fhn::v2_bounds(), r, 101);
    for (auto [now, before] : {std::pair{k.a1, prev.a1}, {k.a2, prev.a2}, {k.b1, prev.b1},
                               {k.b2, prev.b2}, {k.eta1, prev.eta1}, {k.theta1, prev.theta1}})
      EXPECT_GE(now, before * (1.0 - 1e-9));  // refined peaks agree to search resolution
    prev = k;
  }
}

TEST(GainBudget, HandCheckedExample) {
  Slack s;
  s.eps = {0.2, 0.2, 0.2, 0.2};
  const auto b = gain_budget(unit_constants(), 1.0, 1.0, 0.5, s);
  ASSERT_TRUE(b.feasible);
  EXPECT_DOUBLE_EQ(b.rho1_max, 2.0 / 15.0);
  EXPECT_DOUBLE_EQ(b.rho2_max, 2.0 / 15.0);
}

TEST(GainBudget, VanishingCouplingJacobians) {
  SupConstants k = unit_constants();
  k.b1 = k.b2 = 0.0;
  Slack s;
  s.eps = {0.2, 0.2, 0.2, 0.2};
  const auto b = gain_budget(k, 1.0, 1.0, 0.5, s);
  EXPECT_DOUBLE_EQ(b.rho1_max, 0.4 / 2.0);
  EXPECT_DOUBLE_EQ(b.rho2_max, 0.4 / 2.0);

  k.a1 = k.a2 = 0.0;
  const auto free = gain_budget(k, 1.0, 1.0, 0.5, s);
  EXPECT_EQ(free.rho1_max, kInf);
  EXPECT_EQ(free.rho2_max, kInf);
}

TEST(GainBudget, InfeasibleAndInvalidSlack) {
  Slack s;
  s.eps = {0.1, 0.1, 0.1, 0.1};
  EXPECT_FALSE(gain_budget(unit_constants(), 1.0, 0.8, 0.8, s).feasible);
  EXPECT_FALSE(gain_budget(unit_constants(), 1.0, 0.8, 0.9, s).feasible);
  s.eps = {0.3, 0.3, 0.1, 0.1};
  EXPECT_THROW(gain_budget(unit_constants(), 1.0, 1.0, 0.5, s), std::invalid_argument);
  s.eps = {0.1, 0.1, 0.3, 0.3};
  EXPECT_THROW(gain_budget(unit_constants(), 1.0, 1.0, 0.5, s), std::invalid_argument);
}

TEST(GainBudget, BudgetsSatisfyTheLinearConditions) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.05, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const SupConstants k = random_constants(rng);
    const double a1 = u(rng);
    const double a2 = u(rng);
    const double alpha = 0.9 * std::min(a1, a2) * std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    const Slack s = default_slack(a1, a2, alpha);
    const auto b = gain_budget(k, a1, a2, alpha, s);
    ASSERT_TRUE(b.feasible);
    const auto [c1, c2] = gain_conditions(k, a1, a2, b.rho1_max, b.rho2_max);
    EXPECT_LE(c1, -alpha);
    EXPECT_LE(c2, -alpha);
  }
}

TEST(GainBudget, ShrinkingSlackNeverEnlargesBudget) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const SupConstants k = random_constants(rng);
    Slack big = default_slack(2.0, 3.0, 0.5);
    Slack small = big;
    for (double &e : small.eps) e *= 0.5;
    const auto wide = gain_budget(k, 2.0, 3.0, 0.5, big);
    const auto narrow = gain_budget(k, 2.0, 3.0, 0.5, small);
    EXPECT_LE(narrow.rho1_max, wide.rho1_max);
    EXPECT_LE(narrow.rho2_max, wide.rho2_max);
  }
}

TEST(DefaultSlack, SplitsIntoThirds) {
  const Slack s = default_slack(1.0, 2.5, 0.4);
  EXPECT_DOUBLE_EQ(s.eps[0], 0.2);
  EXPECT_DOUBLE_EQ(s.eps[1], 0.2);
  EXPECT_DOUBLE_EQ(s.eps[2], 0.7);
  EXPECT_DOUBLE_EQ(s.eps[3], 0.7);
}

TEST(Certify, DecoupledSystemPasses) {
  const auto ic = linear_pair(0.0, 0.0, 0.0, 0.0);
  CertifyRequest req;
  req.radius = 2.0;
  req.alpha1 = 1.0;
  req.alpha2 = 2.0;
  req.alpha = 1.0 - 0.1;
  req.grid_density = 51;
  req.decay_samples = 200;
  const auto c = certify(ic, half_norm(), half_norm(), half_norm_bounds(), half_norm_bounds(), req);
  EXPECT_TRUE(c.passed()) << c.message;
  EXPECT_EQ(c.certificate.rho1_max, kInf);
  EXPECT_EQ(c.checked_rho1, 1.0);
  ASSERT_TRUE(c.composite.has_value());
  EXPECT_TRUE(c.composite->passed);
}

TEST(Certify, ComponentFailureIsReported) {
  const auto ic = linear_pair(-1.0, 1.0, 0.1, 0.1);
  CertifyRequest req;
  req.radius = 1.0;
  req.alpha1 = 1.5;  // actual rate of the x-block is 1
  req.alpha2 = 2.0;
  req.alpha = 0.5;
  req.grid_density = 21;
  req.decay_samples = 100;
  const auto c = certify(ic, half_norm(), half_norm(), half_norm_bounds(), half_norm_bounds(), req);
  EXPECT_EQ(c.status, CertificationStatus::component_check_failed);
  EXPECT_FALSE(c.component1.passed);
  EXPECT_NE(c.message.find("x-block"), std::string::npos);
}

TEST(Certify, FhnFigureTwoPassesAtTheBudget) {
  const auto p = fhn_pipeline(2);
  ASSERT_TRUE(p.invariant.found);
  const auto c = certify_fhn(p, fhn_request(p));
  ASSERT_TRUE(c.passed()) << c.message;
  EXPECT_GT(c.certificate.rho1_max, 0.0);
  EXPECT_GT(c.certificate.rho2_max, 0.0);
  EXPECT_EQ(c.checked_rho1, c.certificate.rho1_max);
  EXPECT_EQ(c.checked_rho2, c.certificate.rho2_max);
  ASSERT_TRUE(c.composite.has_value());
  EXPECT_LE(c.composite->worst_violation, 0.0);
  const auto [c1, c2] = gain_conditions(c.certificate.constants, c.certificate.alpha1,
                                        c.certificate.alpha2, c.checked_rho1, c.checked_rho2);
  EXPECT_LE(c1, -c.certificate.alpha);
  EXPECT_LE(c2, -c.certificate.alpha);
}

TEST(Certify, FhnFigureOneRefusesUnitGains) {
  const auto p = fhn_pipeline(1);
  auto req = fhn_request(p);
  req.requested_gains = std::make_pair(1.0, 1.0);
  const auto c = certify_fhn(p, req);
  EXPECT_EQ(c.status, CertificationStatus::requested_gain_exceeds_budget);
  EXPECT_FALSE(c.passed());
  EXPECT_NE(c.message.find("exceed"), std::string::npos);
}

TEST(Certify, RecordRoundTrips) {
  const auto p = fhn_pipeline(2);
  const auto c = certify_fhn(p, fhn_request(p));
  const KeyValueDocument doc = certificate_record(c);
  std::ostringstream os;
  write_key_value(os, doc);
  std::istringstream is(os.str());
  const KeyValueDocument back = parse_key_value(is, "record");
  ASSERT_NE(back.find("constants"), nullptr);
  EXPECT_NE(back.find("constants")->find("provenance")->value.find("inflated"), std::string::npos);
  EXPECT_EQ(std::stod(back.find("constants")->find("a1")->value), c.certificate.constants.a1);
  EXPECT_EQ(std::stod(back.find("budget")->find("rho2_max")->value), c.certificate.rho2_max);
  EXPECT_EQ(back.find("certificate")->find("status")->value, "certified");

  std::ostringstream report;
  write_certificate_report(report, c);
  EXPECT_NE(report.str().find("no violation found"), std::string::npos);
}

TEST(IspsSmallGain, HalfGainsPass) {
  IspsGainPair g{[](double r) { return r / 2.0; }, [](double r) { return r / 2.0; }, 0.1, 10.0};
  const auto rep = isps_smallgain_check(g);
  EXPECT_TRUE(rep.passed);
  EXPECT_DOUBLE_EQ(rep.worst_ratio, 0.25);
}

TEST(IspsSmallGain, DoublingGainFails) {
  IspsGainPair g{[](double r) { return 2.0 * r; }, [](double r) { return r; }, 0.1, 10.0};
  const auto rep = isps_smallgain_check(g);
  EXPECT_FALSE(rep.passed);
  EXPECT_DOUBLE_EQ(rep.worst_ratio, 2.0);
}

TEST(IspsSmallGain, SquareRootsBeyondThreshold) {
  IspsGainPair g{[](double r) { return std::sqrt(r); }, [](double r) { return std::sqrt(r); }, 1.0, 100.0};
  const auto rep = isps_smallgain_check(g);
  EXPECT_TRUE(rep.passed);
  EXPECT_LE(rep.worst_ratio, 1.0);
  EXPECT_TRUE(rep.gains_monotone);
}
