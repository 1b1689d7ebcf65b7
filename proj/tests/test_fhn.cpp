#include "incstab/fhn.hpp"
#include "incstab/sampling.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

using namespace incstab;
using fhn::FhnParams;

namespace {

FhnParams r21(double alpha = 1.0) { return FhnParams::from_r(2.1, alpha, 0.1, 1.0, 1.0, 1.0); }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Vector vec1(double x) { return Vector::Constant(1, x); }

double gk_mu(const FhnParams &p) {
  const double s = p.plateau_edge();
  return -fhn::integrate_fc_exponent(p, -s, s, 1e-14, 30);
}

double simpson_mu(const FhnParams &p) {
  const double s = p.plateau_edge();
  return -oracle::adaptive_simpson([&p](double x) { return fhn::fc_integrand(p, x); }, -s, s, 1e-13);
}

}  // namespace

TEST(FhnParams, FromRDerivesOffsetAndChecksAlpha) {
  const auto p = r21();
  EXPECT_DOUBLE_EQ(p.c, 2.1 * 2.1 * 2.1 - 2.1);
  EXPECT_DOUBLE_EQ(p.effective_r(), 2.1);
  EXPECT_LT(p.plateau_edge(), 2.1);
  EXPECT_THROW(FhnParams::from_r(1.9, 1.0, 0.1, 1.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(FhnParams::from_r(2.1, 0.0, 0.1, 1.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(FhnParams::from_r(2.1, 2.0 * 2.1 * 2.1 - 2.0, 0.1, 1.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_NO_THROW(FhnParams::from_r(2.1, 2.0 * 2.1 * 2.1 - 2.01, 0.1, 1.0, 1.0, 1.0));
}

TEST(FhnParams, EffectiveRadiusSolvesCubic) {
  FhnParams p;
  p.c = 1.0;
  const double r = p.effective_r();
  EXPECT_NEAR(r * r * r - r, 1.0, 1e-12);
  EXPECT_NEAR(r, 1.324717957244746, 1e-10);
}

TEST(FhnParams, FigurePresets) {
  const auto f1 = fhn::figure_params(1);
  const auto f2 = fhn::figure_params(2);
  const auto f3 = fhn::figure_params(3);
  EXPECT_EQ(f1.c, 1.0);
  EXPECT_EQ(f1.b, 0.1);
  EXPECT_EQ(f1.epsilon, 1.0);
  EXPECT_EQ(f1.rho1, 1.0);
  EXPECT_EQ(f1.rho2, 1.0);
  EXPECT_EQ(f2.c, 1.0);
  EXPECT_EQ(f2.b, 0.1);
  EXPECT_EQ(f2.epsilon, 1.0);
  EXPECT_EQ(f2.rho1, 0.1);
  EXPECT_EQ(f2.rho2, 0.1);
  EXPECT_EQ(f3.c, 1.0);
  EXPECT_EQ(f3.b, 1.0);
  EXPECT_EQ(f3.epsilon, 0.9);
  EXPECT_EQ(f3.rho1, 1.0);
  EXPECT_EQ(f3.rho2, 1.0);
  EXPECT_THROW(fhn::figure_params(4), std::invalid_argument);
}

TEST(FhnField, ValueAtOriginIsOffset) {
  const auto f = assemble(fhn::fhn_field(fhn::figure_params(1)));
  const Vector v = f.eval(0.0, vec({0.0, 0.0}));
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], 0.0);
}

TEST(FhnField, JacobianMatchesClosedFormAndDifferences) {
  const auto p = fhn::figure_params(3);
  const auto f = assemble(fhn::fhn_field(p));
  for (const Vector &z : {vec({0.3, -1.0}), vec({-2.2, 0.7}), vec({1.5, 2.0})}) {
    Matrix expected(2, 2);
    expected << 1.0 - z[0] * z[0], -p.rho1, p.rho2 / p.epsilon, -p.b / p.epsilon;
    const Matrix j = f.jacobian(0.0, z);
    EXPECT_LT((j - expected).norm(), 1e-15);
    const Matrix fd = oracle::fd_jacobian([&f](const Vector &x) { return f.eval(0.0, x); }, z, 1e-5);
    EXPECT_LT((fd - expected).norm(), 1e-8);
  }
}

TEST(FhnField, ZeroGainsDecouple) {
  auto p = fhn::figure_params(1);
  p.rho1 = p.rho2 = 0.0;
  const auto f = assemble(fhn::fhn_field(p));
  const Vector v = f.eval(0.0, vec({1.0, 5.0}));
  EXPECT_DOUBLE_EQ(v[0], 1.0 - 1.0 / 3.0 + 1.0);
  EXPECT_DOUBLE_EQ(v[1], -0.1 * 5.0);
}

TEST(FcIntegrand, VanishesAtWindowEdges) {
  const auto p = r21();
  const double s = p.plateau_edge();
  EXPECT_NEAR(fhn::fc_integrand(p, s), 0.0, 1e-15);
  EXPECT_NEAR(fhn::fc_integrand(p, -s), 0.0, 1e-15);
}

TEST(BuildFc, MuAgreesAcrossIndependentQuadratures) {
  const auto p = r21();
  const auto table = fhn::build_fc(p);
  EXPECT_GT(table.mu, 0.0);
  EXPECT_TRUE(std::isfinite(table.mu));
  EXPECT_NEAR(gk_mu(p), simpson_mu(p), 1e-8);
  EXPECT_NEAR(table.mu, simpson_mu(p), 1e-8);
  EXPECT_LE(table.quadrature_error, 1e-10);
}

TEST(BuildFc, TableInvariants) {
  for (const auto &p : {r21(), r21(3.0), fhn::figure_params(1)}) {
    const auto t = fhn::build_fc(p);
    const double emu = std::exp(t.mu);
    EXPECT_EQ(t.fc(t.s_star), 1.0);
    EXPECT_EQ(t.fc(-t.s_star), emu);
    EXPECT_EQ(t.fc(t.s_star + 3.0), 1.0);
    EXPECT_EQ(t.fc(-t.s_star - 3.0), emu);
    EXPECT_EQ(t.values.back(), 1.0);
    EXPECT_EQ(t.values.front(), emu);
    for (std::size_t k = 1; k < t.grid.size(); ++k) EXPECT_LE(t.values[k], t.values[k - 1]);
    for (const auto &x : box_grid(1, t.s_star + 1.0, 4001)) {
      const double v = t.fc(x[0]);
      const double d = t.fc_prime(x[0]);
      EXPECT_GE(v, 1.0);
      EXPECT_LE(v, emu);
      EXPECT_GE(d, -t.eta);
      EXPECT_LE(d, 0.0);
    }
    const double fc0 = t.fc(0.0);
    EXPECT_GT(fc0, 1.0);
    EXPECT_LT(fc0, emu);
  }
}

TEST(BuildFc, SlopeMatchesPlateausAtTheEdges) {
  const auto t = fhn::build_fc(r21());
  const double s = t.s_star;
  const auto one_sided = [&t](double x, double h) { return (t.fc(x + h) - t.fc(x)) / h; };
  for (double edge : {s, -s}) {
    const double sign = edge > 0 ? -1.0 : 1.0;
    const double coarse = std::abs(one_sided(edge, sign * 1e-2));
    const double fine = std::abs(one_sided(edge, sign * 1e-3));
    EXPECT_LT(fine, coarse / 5.0) << "edge " << edge;
    EXPECT_LT(fine, 1e-2);
  }
  EXPECT_EQ(t.slopes.front(), 0.0);
  EXPECT_EQ(t.slopes.back(), 0.0);
}

TEST(BuildFc, EtaIsAttained) {
  for (const auto &p : {r21(), fhn::figure_params(1)}) {
    const auto t = fhn::build_fc(p);
    double fine_min = INFINITY;
    const int n = 200001;
    for (int k = 0; k < n; ++k) {
      const double x = -t.s_star + 2.0 * t.s_star * k / (n - 1);
      fine_min = std::min(fine_min, t.fc_prime(x));
    }
    EXPECT_NEAR(fine_min, -t.eta, 1e-6);
    EXPECT_LE(-t.eta, fine_min);
    EXPECT_NEAR(t.fc_prime(t.eta_location), -t.eta, 1e-12 * t.eta);
  }
}

TEST(BuildFc, InterpolationMatchesDirectQuadrature) {
  const auto p = r21();
  const auto t = fhn::build_fc(p);
  for (int k = 0; k < 100; ++k) {
    const double x = -t.s_star + 2.0 * t.s_star * (k + 0.37) / 100.3;
    EXPECT_NEAR(t.fc(x), fhn::fc_direct(p, x), 1e-7) << "x = " << x;
  }
}

TEST(BuildFc, RejectsInvalidParameters) {
  auto p = fhn::figure_params(1);
  p.alpha = 2.0 * p.effective_r() * p.effective_r() - 2.0 + 0.01;
  EXPECT_THROW(fhn::build_fc(p), std::invalid_argument);
  p = fhn::figure_params(1);
  p.c = 0.5;
  EXPECT_THROW(fhn::build_fc(p), std::invalid_argument);
  p = fhn::figure_params(1);
  p.epsilon = 0.0;
  EXPECT_THROW(fhn::build_fc(p), std::invalid_argument);
}

TEST(Candidates, V1ValueAndGradients) {
  const auto table = std::make_shared<const fhn::FcTable>(fhn::build_fc(r21()));
  const auto v1 = fhn::v1_candidate(table);
  for (double x : {-3.0, -0.5, 0.2, 1.0, 4.0}) {
    EXPECT_EQ(v1.value(vec1(x), vec1(0.0)), 0.0);
    const double dx = 0.8;
    EXPECT_DOUBLE_EQ(v1.value(vec1(x), vec1(dx)), table->fc(x) * dx * dx);
    EXPECT_DOUBLE_EQ(v1.grad_state(vec1(x), vec1(dx))[0], table->fc_prime(x) * dx * dx);
    EXPECT_DOUBLE_EQ(v1.grad_disp(vec1(x), vec1(dx))[0], 2.0 * table->fc(x) * dx);
  }
  const auto v2 = fhn::v2_candidate();
  EXPECT_EQ(v2.c_lower, 0.5);
  EXPECT_EQ(v2.c_upper, 0.5);
  EXPECT_DOUBLE_EQ(v2.value(vec1(3.0), vec1(2.0)), 2.0);
}

TEST(Candidates, ExactDecayInsideAndBoundOutside) {
  const auto p = r21();
  const auto table = std::make_shared<const fhn::FcTable>(fhn::build_fc(p));
  const auto v1 = fhn::v1_candidate(table);
  const auto ic = fhn::fhn_field(p);
  for (int k = 0; k < 1000; ++k) {
    const double x = -table->s_star + 2.0 * table->s_star * (k + 0.5) / 1000.0;
    const double v = v1.value(vec1(x), vec1(1.0));
    const double rate = vdot(v1, ic.f1, 0.0, vec1(x), vec1(1.0));
    EXPECT_LE(std::abs(rate + p.alpha * v), 1e-8 * v) << "x = " << x;
  }
  for (int k = 0; k < 1000; ++k) {
    const double mag = table->s_star + 5.0 * (k / 2 + 0.5) / 500.0;
    const double x = k % 2 ? mag : -mag;
    const double v = v1.value(vec1(x), vec1(1.0));
    EXPECT_LE(vdot(v1, ic.f1, 0.0, vec1(x), vec1(1.0)) + p.alpha * v, 1e-9) << "x = " << x;
  }
}

TEST(Candidates, DisplacementEnvelopeOfIsolatedXBlock) {
  const auto p = r21();
  const auto table = fhn::build_fc(p);
  const auto ic = fhn::fhn_field(p);
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  cfg.max_time = 8.0;
  for (double x0 : {-4.0, -1.0, 0.0, 2.5}) {
    const auto traj = integrate_with_displacement(ic.f1, 0.0, vec1(x0), vec1(1.0), cfg);
    for (std::size_t i = 0; i < traj.size(); i += 100) {
      const double bound = std::exp(-p.alpha * traj.times[i] / 2.0) * std::sqrt(table.fc(x0));
      EXPECT_LE(std::abs(traj.displacements[i][0]), bound * (1.0 + 1e-6));
    }
  }
}

TEST(CompositeBound, MatchesPrintedFormula) {
  const auto p = fhn::figure_params(3);
  const auto t = fhn::build_fc(p);
  const double m = 0.1;
  const auto cb = fhn::composite_vdot_bound(p, t, m);
  const double emu = std::exp(t.mu);
  const double dx = -p.alpha + t.eta * std::sqrt((1.0 / p.b) * (1.0 + p.c * p.c / 4.0) + m / p.epsilon) +
                    emu / p.epsilon + 0.5;
  const double dy = -p.b / p.epsilon + p.epsilon * emu + 0.5;
  EXPECT_DOUBLE_EQ(cb.coef_dx, dx);
  EXPECT_DOUBLE_EQ(cb.coef_dy, dy);
  EXPECT_EQ(cb.concludes_ies, dx < 0.0 && dy < 0.0);
}

TEST(CompositeBound, ConstantMetricLimit) {
  auto p = fhn::figure_params(3);
  fhn::FcTable flat;
  flat.params = p;
  flat.mu = 0.0;
  flat.eta = 0.0;
  const auto cb = fhn::composite_vdot_bound(p, flat, 0.1);
  EXPECT_DOUBLE_EQ(cb.coef_dx, -p.alpha + 1.0 / p.epsilon + 0.5);
  EXPECT_DOUBLE_EQ(cb.coef_dy, -p.b / p.epsilon + p.epsilon + 0.5);
}

TEST(CompositeBound, LargerBLowersTheDisplacementCoefficient) {
  auto p = fhn::figure_params(3);
  const auto t = fhn::build_fc(p);
  double previous = INFINITY;
  for (double b : {1.0, 1.5, 3.0, 10.0}) {
    p.b = b;
    const double coef = fhn::composite_vdot_bound(p, t, 0.1).coef_dy;
    EXPECT_LT(coef, previous);
    previous = coef;
  }
}

TEST(CompositeBound, RefusesOutsideItsHypotheses) {
  const auto t = fhn::build_fc(fhn::figure_params(3));
  auto p = fhn::figure_params(3);
  p.b = 0.5;
  EXPECT_THROW(fhn::composite_vdot_bound(p, t, 0.1), std::invalid_argument);
  p = fhn::figure_params(3);
  p.rho1 = 0.5;
  EXPECT_THROW(fhn::composite_vdot_bound(p, t, 0.1), std::invalid_argument);
  p = fhn::figure_params(3);
  EXPECT_THROW(fhn::composite_vdot_bound(p, t, 0.0), std::invalid_argument);
}
