#include "incstab/finsler.hpp"
#include "incstab/fhn.hpp"
#include "incstab/sampling.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

using namespace incstab;

namespace {

FinslerCandidate half_norm(int dim) {
  FinslerCandidate c;
  c.dim = dim;
  c.value = [](const Vector &, const Vector &dz) { return 0.5 * dz.squaredNorm(); };
  c.grad_state = [](const Vector &z, const Vector &) -> Vector { return Vector::Zero(z.size()); };
  c.grad_disp = [](const Vector &, const Vector &dz) -> Vector { return dz; };
  c.c_lower = c.c_upper = 0.5;
  return c;
}

TimeVaryingField minus_identity(int dim) {
  TimeVaryingField f;
  f.dim = dim;
  f.eval = [](double, const Vector &z) -> Vector { return -z; };
  f.jacobian = [dim](double, const Vector &) -> Matrix { return -Matrix::Identity(dim, dim); };
  return f;
}

Vector vec1(double x) { return Vector::Constant(1, x); }

std::shared_ptr<const fhn::FcTable> table_for(const fhn::FhnParams &p) {
  return std::make_shared<const fhn::FcTable>(fhn::build_fc(p));
}

fhn::FhnParams r21() { return fhn::FhnParams::from_r(2.1, 1.0, 0.1, 1.0, 1.0, 1.0); }

// A state-dependent metric on R^2 and its partial derivatives.
QuadraticMetric wavy_metric() {
  QuadraticMetric qm;
  qm.dim = 2;
  qm.metric = [](const Vector &z) {
    Matrix m(2, 2);
    m << 2.0 + std::sin(z[0]), 0.3 * z[1], 0.3 * z[1], 3.0 + z[0] * z[0];
    return m;
  };
  qm.metric_partials = [](const Vector &z) {
    Matrix d0(2, 2);
    Matrix d1(2, 2);
    d0 << std::cos(z[0]), 0.0, 0.0, 2.0 * z[0];
    d1 << 0.0, 0.3, 0.3, 0.0;
    return std::vector<Matrix>{d0, d1};
  };
  qm.c_lower = 0.9;
  qm.c_upper = 8.0;
  return qm;
}

TimeVaryingField van_der_pol() {
  TimeVaryingField f;
  f.dim = 2;
  f.eval = [](double, const Vector &z) {
    Vector v(2);
    v << z[1], (1.0 - z[0] * z[0]) * z[1] - z[0];
    return v;
  };
  f.jacobian = [](double, const Vector &z) {
    Matrix j(2, 2);
    j << 0.0, 1.0, -2.0 * z[0] * z[1] - 1.0, 1.0 - z[0] * z[0];
    return j;
  };
  return f;
}

}  // namespace

TEST(Vdot, HalfNormOnContractingLinearField) {
  const auto c = half_norm(3);
  Vector z(3);
  Vector dz(3);
  z << 1.0, -2.0, 0.5;
  dz << 0.3, 0.4, -1.2;
  EXPECT_DOUBLE_EQ(vdot(c, minus_identity(3), 0.0, z, dz), -dz.squaredNorm());
}

TEST(Vdot, FhnV2IsExactlyLinearDecay) {
  const auto p = fhn::figure_params(3);
  const auto ic = fhn::fhn_field(p);
  const auto v2 = fhn::v2_candidate();
  for (double y : {-3.0, 0.0, 2.5})
    for (double dy : {-1.0, 0.25, 2.0})
      EXPECT_NEAR(vdot(v2, ic.f2, 0.0, vec1(y), vec1(dy)), -(p.b / p.epsilon) * dy * dy, 1e-15);
}

TEST(Vdot, FhnV1DecaysExactlyInsideTheWindow) {
  const auto p = r21();
  const auto table = table_for(p);
  const auto ic = fhn::fhn_field(p);
  const auto v1 = fhn::v1_candidate(table);
  for (int k = -20; k <= 20; ++k) {
    const double x = 0.999 * table->s_star * k / 20.0;
    const double v = v1.value(vec1(x), vec1(1.0));
    const double rate = vdot(v1, ic.f1, 0.0, vec1(x), vec1(1.0));
    EXPECT_NEAR(rate / v, -p.alpha, 1e-9) << "x = " << x;
  }
}

TEST(Sandwich, PassesWithSlackBounds) {
  FinslerCandidate c = make_candidate(2, [](const Vector &, const Vector &dz) { return 2.0 * dz.squaredNorm(); }, 1.0, 3.0);
  const auto samples = state_displacement_samples(Vector::Constant(2, -2.0), Vector::Constant(2, 2.0), 200);
  const auto rep = check_sandwich(c, samples);
  EXPECT_TRUE(rep.passed);
  EXPECT_GT(rep.worst_lower_margin, 0.0);
  EXPECT_GT(rep.worst_upper_margin, 0.0);
  EXPECT_NE(rep.summary().find("no violation found"), std::string::npos);
}

TEST(Sandwich, FhnV1OnWideGrid) {
  const auto table = table_for(r21());
  const auto v1 = fhn::v1_candidate(table);
  EXPECT_EQ(v1.c_lower, 1.0);
  EXPECT_DOUBLE_EQ(v1.c_upper, std::exp(table->mu));
  std::vector<StateDispSample> samples;
  for (const auto &x : box_grid(1, 5.0, 501)) samples.emplace_back(x, vec1(1.0));
  EXPECT_TRUE(check_sandwich(v1, samples).passed);
}

TEST(Sandwich, OverclaimedLowerBoundFails) {
  FinslerCandidate c = make_candidate(2, [](const Vector &, const Vector &dz) { return dz.squaredNorm(); }, 2.0, 3.0);
  const auto samples = state_displacement_samples(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0), 50);
  const auto rep = check_sandwich(c, samples);
  EXPECT_FALSE(rep.passed);
  EXPECT_LT(rep.worst_lower_margin, 0.0);
  EXPECT_NE(rep.summary().find("violated"), std::string::npos);
}

TEST(Sandwich, EmptySampleSetIsRejected) {
  EXPECT_THROW(check_sandwich(half_norm(1), {}), std::invalid_argument);
}

TEST(Sandwich, TiesResolveToLowestIndex) {
  const auto c = half_norm(1);
  std::vector<StateDispSample> samples(4, {vec1(0.0), vec1(1.0)});
  const auto rep = check_sandwich(c, samples);
  EXPECT_EQ(rep.worst_lower_index, 0u);
  EXPECT_EQ(rep.worst_upper_index, 0u);
}

TEST(Decay, FhnV2AtTheLinearRate) {
  const auto p = fhn::figure_params(1);
  const auto ic = fhn::fhn_field(p);
  const auto v2 = fhn::v2_candidate();
  std::vector<StateDispSample> samples;
  for (const auto &y : box_grid(1, 4.0, 41)) samples.emplace_back(y, vec1(0.7));
  const auto pts = at_time(0.0, samples);

  InequalityTolerance exact;
  exact.slack = 0.0;
  EXPECT_TRUE(check_decay(v2, ic.f2, p.b / p.epsilon, pts, DecayForm::relative_to_value, exact).passed);

  // V2' = -2 (b/eps) V2, so the value form is tight at twice the rate.
  const auto tight = check_decay(v2, ic.f2, 2.0 * p.b / p.epsilon, pts);
  EXPECT_TRUE(tight.passed);
  EXPECT_NEAR(tight.worst_violation, 0.0, 1e-15);
  EXPECT_FALSE(check_decay(v2, ic.f2, 2.1 * p.b / p.epsilon, pts).passed);

  // Component form: V2' <= -(b/eps) |dy|^2 holds with equality.
  const auto norm_form = check_decay(v2, ic.f2, p.b / p.epsilon, pts, DecayForm::relative_to_norm);
  EXPECT_TRUE(norm_form.passed);
  EXPECT_NEAR(norm_form.worst_violation, 0.0, 1e-15);
}

TEST(Decay, FhnV1OnGrid) {
  const auto p = r21();
  const auto table = table_for(p);
  const auto ic = fhn::fhn_field(p);
  std::vector<StateDispSample> samples;
  for (const auto &x : box_grid(1, 6.0, 1201)) samples.emplace_back(x, vec1(1.0));
  EXPECT_TRUE(check_decay(fhn::v1_candidate(table), ic.f1, p.alpha, at_time(0.0, samples)).passed);
}

TEST(Decay, CoupledFigureOneCompositeFails) {
  const auto p = fhn::figure_params(1);
  const auto table = table_for(p);
  const auto composite = compose(fhn::v1_candidate(table), fhn::v2_candidate());
  const auto field = assemble(fhn::fhn_field(p));
  const auto samples = state_displacement_samples(Vector::Constant(2, -4.0), Vector::Constant(2, 4.0), 2000);
  const auto rep = check_decay(composite, field, 0.05, at_time(0.0, samples));
  EXPECT_FALSE(rep.passed);
  EXPECT_GT(rep.worst_violation, 0.0);
  EXPECT_LT(rep.worst_index, samples.size());
}

TEST(Decay, PassAtRateImpliesPassAtSmallerRate) {
  const auto qm = wavy_metric();
  const auto cand = make_quadratic_candidate(qm);
  const auto field = minus_identity(2);
  const auto pts = at_time(0.0, state_displacement_samples(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0), 400));
  for (double alpha : {0.1, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    if (!check_decay(cand, field, alpha, pts).passed) continue;
    for (double smaller : {0.5 * alpha, 0.9 * alpha, 0.01})
      EXPECT_TRUE(check_decay(cand, field, smaller, pts).passed) << alpha << " -> " << smaller;
  }
}

TEST(GrowthBounds, HalfNormBounds) {
  const auto c = half_norm(2);
  AssumptionTwoBounds b{[](const Vector &) { return 0.0; }, [](const Vector &) { return 1.0; }};
  const auto samples = state_displacement_samples(Vector::Constant(2, -3.0), Vector::Constant(2, 3.0), 100);
  EXPECT_TRUE(verify_assumption2(c, b, samples).passed);
}

TEST(GrowthBounds, FhnV1BoundsOnDenseGrid) {
  const auto table = table_for(r21());
  const auto v1 = fhn::v1_candidate(table);
  std::vector<StateDispSample> samples;
  for (const auto &x : box_grid(1, table->s_star, 2001)) samples.emplace_back(x, vec1(1.3));
  EXPECT_TRUE(verify_assumption2(v1, fhn::v1_bounds(table), samples).passed);
  const double emu = std::exp(table->mu);
  for (const auto &[x, dx] : samples) {
    EXPECT_LE(std::abs(table->fc_prime(x[0])), table->eta * (1.0 + 1e-12));
    EXPECT_LE(2.0 * table->fc(x[0]), 2.0 * emu * (1.0 + 1e-12));
  }
}

TEST(GrowthBounds, UndersizedZetaIsLocated) {
  const auto c = half_norm(1);
  AssumptionTwoBounds b{[](const Vector &) { return 0.0; },
                        [](const Vector &z) { return z[0] > 0.5 ? 0.5 : 1.0; }};
  std::vector<StateDispSample> samples;
  for (const auto &x : box_grid(1, 1.0, 5)) samples.emplace_back(x, vec1(1.0));
  const auto rep = verify_assumption2(c, b, samples);
  EXPECT_FALSE(rep.passed);
  EXPECT_NEAR(rep.worst_disp_excess, 0.5, 1e-15);
  EXPECT_EQ(rep.worst_disp_index, 4u);
}

TEST(Compose, TwoHalfNormsGiveHalfNormOnProduct) {
  const auto c = compose(half_norm(1), half_norm(2));
  EXPECT_EQ(c.dim, 3);
  Vector z(3);
  Vector dz(3);
  z << 1.0, 2.0, 3.0;
  dz << 0.5, -1.0, 2.0;
  EXPECT_DOUBLE_EQ(c.value(z, dz), 0.5 * dz.squaredNorm());
  EXPECT_TRUE(c.grad_disp(z, dz).isApprox(dz));
  EXPECT_EQ(c.c_lower, 0.5);
  EXPECT_EQ(c.c_upper, 0.5);
}

TEST(Compose, FhnConstantsFromQuadratureOracle) {
  const auto p = r21();
  const auto table = table_for(p);
  const double s = p.plateau_edge();
  const double mu = -oracle::adaptive_simpson([&p](double x) { return fhn::fc_integrand(p, x); }, -s, s, 1e-13);
  const auto c = compose(fhn::v1_candidate(table), fhn::v2_candidate());
  EXPECT_EQ(c.c_lower, 0.5);
  EXPECT_NEAR(std::log(c.c_upper), mu, 1e-8);
}

TEST(Compose, ValueIsSumOfPartsAndSandwichSurvives) {
  const auto table = table_for(r21());
  const auto v1 = fhn::v1_candidate(table);
  const auto v2 = fhn::v2_candidate();
  const auto c = compose(v1, v2);
  const auto samples = state_displacement_samples(Vector::Constant(2, -4.0), Vector::Constant(2, 4.0), 500);
  for (const auto &[z, dz] : samples)
    EXPECT_EQ(c.value(z, dz), v1.value(z.head(1), dz.head(1)) + v2.value(z.tail(1), dz.tail(1)));
  EXPECT_TRUE(check_sandwich(c, samples).passed);
}

TEST(Quadratic, SymbolicVdotMatchesGradientVdot) {
  const auto qm = wavy_metric();
  const auto cand = make_quadratic_candidate(qm);
  const auto field = van_der_pol();
  for (const auto &[z, dz] : state_displacement_samples(Vector::Constant(2, -2.0), Vector::Constant(2, 2.0), 300)) {
    const double symbolic = quadratic_vdot(qm, field, 0.0, z, dz);
    const double generic = vdot(cand, field, 0.0, z, dz);
    EXPECT_NEAR(symbolic, generic, 1e-10 * (1.0 + std::abs(symbolic)));
  }
}

TEST(Quadratic, HomogeneityAndZeroDisplacement) {
  const auto cand = make_quadratic_candidate(wavy_metric());
  Vector z(2);
  Vector dz(2);
  z << 0.4, -1.3;
  dz << 0.7, 0.2;
  EXPECT_EQ(cand.value(z, Vector::Zero(2)), 0.0);
  for (double s : {-2.0, 0.5, 3.0}) EXPECT_NEAR(cand.value(z, s * dz), s * s * cand.value(z, dz), 1e-14);
}

TEST(Quadratic, AnalyticGradientsMatchFiniteDifferences) {
  const auto cand = make_quadratic_candidate(wavy_metric());
  Vector z(2);
  Vector dz(2);
  z << 0.4, -1.3;
  dz << 0.7, 0.2;
  EXPECT_LT((cand.grad_state(z, dz) - fd_grad_state(cand.value, z, dz)).norm(), 1e-8);
  EXPECT_LT((cand.grad_disp(z, dz) - fd_grad_disp(cand.value, z, dz)).norm(), 1e-8);
}

TEST(Quadratic, EigenBoundsAndSymmetryCheck) {
  QuadraticMetric qm;
  qm.dim = 2;
  qm.metric = [](const Vector &z) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0 + z[0] * z[0];
    m(1, 1) = 2.0;
    return m;
  };
  const auto [lo, hi] = metric_eigen_bounds(qm, box_grid(2, 1.0, 5));
  EXPECT_DOUBLE_EQ(lo, 1.0);
  EXPECT_DOUBLE_EQ(hi, 2.0);

  qm.metric = [](const Vector &) {
    Matrix m(2, 2);
    m << 1.0, 0.5, 0.0, 1.0;
    return m;
  };
  EXPECT_THROW(metric_eigen_bounds(qm, box_grid(2, 1.0, 3)), std::invalid_argument);
}
