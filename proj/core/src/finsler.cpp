#include "incstab/finsler.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace incstab {

namespace {

double fd_step(double arg) { return 1e-6 * (1.0 + std::abs(arg)); }

void require_dims(const FinslerCandidate &cand, const Vector &z, const Vector &dz,
                  const char *where) {
  if (z.size() != cand.dim || dz.size() != cand.dim)
    throw DimensionError(std::string(where) + ": sample dimension does not match candidate (" +
                         std::to_string(cand.dim) + ")");
}

const char *form_name(DecayForm form) {
  return form == DecayForm::relative_to_value ? "V' + alpha V" : "V' + alpha |dz|^2";
}

}  // namespace

Vector fd_grad_state(const StateDispFn &value, const Vector &z, const Vector &dz) {
  Vector g(z.size());
  Vector zp = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double h = fd_step(z[i]);
    zp[i] = z[i] + h;
    const double up = value(zp, dz);
    zp[i] = z[i] - h;
    const double down = value(zp, dz);
    zp[i] = z[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

Vector fd_grad_disp(const StateDispFn &value, const Vector &z, const Vector &dz) {
  Vector g(dz.size());
  Vector dp = dz;
  for (Eigen::Index i = 0; i < dz.size(); ++i) {
    const double h = fd_step(dz[i]);
    dp[i] = dz[i] + h;
    const double up = value(z, dp);
    dp[i] = dz[i] - h;
    const double down = value(z, dp);
    dp[i] = dz[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

FinslerCandidate make_candidate(int dim, StateDispFn value, double c_lower, double c_upper) {
  FinslerCandidate cand;
  cand.dim = dim;
  cand.value = value;
  cand.grad_state = [value](const Vector &z, const Vector &dz) { return fd_grad_state(value, z, dz); };
  cand.grad_disp = [value](const Vector &z, const Vector &dz) { return fd_grad_disp(value, z, dz); };
  cand.c_lower = c_lower;
  cand.c_upper = c_upper;
  return cand;
}

FinslerCandidate make_quadratic_candidate(const QuadraticMetric &qm) {
  FinslerCandidate cand;
  cand.dim = qm.dim;
  cand.c_lower = qm.c_lower;
  cand.c_upper = qm.c_upper;
  cand.value = [qm](const Vector &z, const Vector &dz) { return dz.dot(qm.metric(z) * dz); };
  cand.grad_state = [qm](const Vector &z, const Vector &dz) {
    const auto partials = qm.metric_partials(z);
    Vector g(qm.dim);
    for (int k = 0; k < qm.dim; ++k) g[k] = dz.dot(partials[static_cast<std::size_t>(k)] * dz);
    return g;
  };
  cand.grad_disp = [qm](const Vector &z, const Vector &dz) -> Vector {
    return 2.0 * (qm.metric(z) * dz);
  };
  return cand;
}

double quadratic_vdot(const QuadraticMetric &qm, const TimeVaryingField &field, double t,
                      const Vector &z, const Vector &dz) {
  const Vector f = field.eval(t, z);
  const Matrix jac = field.jacobian(t, z);
  const Matrix m = qm.metric(z);
  const auto partials = qm.metric_partials(z);
  double transport = 0.0;
  for (int k = 0; k < qm.dim; ++k) transport += f[k] * dz.dot(partials[static_cast<std::size_t>(k)] * dz);
  const Matrix sym = m * jac + jac.transpose() * m;
  return transport + dz.dot(sym * dz);
}

std::pair<double, double> metric_eigen_bounds(const QuadraticMetric &qm,
                                              const std::vector<Vector> &states) {
  if (states.empty()) throw std::invalid_argument("metric_eigen_bounds: empty sample set");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto &z : states) {
    const Matrix m = qm.metric(z);
    if ((m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm()))
      throw std::invalid_argument("metric_eigen_bounds: metric is not symmetric at a sample");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
  }
  return {lo, hi};
}

double vdot(const FinslerCandidate &cand, const TimeVaryingField &field, double t,
            const Vector &z, const Vector &dz) {
  require_dims(cand, z, dz, "vdot");
  if (field.dim != cand.dim) throw DimensionError("vdot: field and candidate dimensions differ");
  return cand.grad_state(z, dz).dot(field.eval(t, z)) +
         cand.grad_disp(z, dz).dot(field.jacobian(t, z) * dz);
}

double InequalityTolerance::at(double v) const { return slack * (1.0 + std::abs(v)); }

std::vector<DecaySample> at_time(double t, const std::vector<StateDispSample> &samples) {
  std::vector<DecaySample> out;
  out.reserve(samples.size());
  for (const auto &[z, dz] : samples) out.push_back({t, z, dz});
  return out;
}

std::string SandwichReport::summary() const {
  std::ostringstream os;
  os << "sandwich: " << samples << " samples, worst lower margin " << worst_lower_margin
     << " (sample " << worst_lower_index << "), worst upper margin " << worst_upper_margin
     << " (sample " << worst_upper_index << "); "
     << (passed ? "no violation found at the sampled points" : "violated");
  return os.str();
}

SandwichReport check_sandwich(const FinslerCandidate &cand,
                              const std::vector<StateDispSample> &samples,
                              InequalityTolerance tol) {
  if (samples.empty()) throw std::invalid_argument("check_sandwich: empty sample set");
  SandwichReport rep;
  rep.samples = samples.size();
  rep.worst_lower_margin = std::numeric_limits<double>::infinity();
  rep.worst_upper_margin = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto &[z, dz] = samples[i];
    require_dims(cand, z, dz, "check_sandwich");
    const double v = cand.value(z, dz);
    const double sq = dz.squaredNorm();
    const double lower = v - cand.c_lower * sq;
    const double upper = cand.c_upper * sq - v;
    if (lower < rep.worst_lower_margin) {
      rep.worst_lower_margin = lower;
      rep.worst_lower_index = i;
    }
    if (upper < rep.worst_upper_margin) {
      rep.worst_upper_margin = upper;
      rep.worst_upper_index = i;
    }
    const double slack = tol.at(v);
    if (lower < -slack || upper < -slack || !std::isfinite(v)) ok = false;
  }
  rep.passed = ok;
  return rep;
}

std::string DecayReport::summary() const {
  std::ostringstream os;
  os << "decay (" << form_name(form) << " <= tol, alpha = " << alpha << "): " << samples
     << " samples, worst value " << worst_violation << " at sample " << worst_index << " (t = "
     << worst_sample.t << "); "
     << (passed ? "no violation found at the sampled points" : "violated");
  return os.str();
}

DecayReport check_decay(const FinslerCandidate &cand, const TimeVaryingField &field, double alpha,
                        const std::vector<DecaySample> &samples, DecayForm form,
                        InequalityTolerance tol) {
  if (samples.empty()) throw std::invalid_argument("check_decay: empty sample set");
  DecayReport rep;
  rep.samples = samples.size();
  rep.alpha = alpha;
  rep.form = form;
  rep.worst_violation = -std::numeric_limits<double>::infinity();
  bool ok = true;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto &s = samples[i];
    const double v = cand.value(s.z, s.dz);
    const double rate = vdot(cand, field, s.t, s.z, s.dz);
    const double reference = form == DecayForm::relative_to_value ? v : s.dz.squaredNorm();
    const double excess = rate + alpha * reference;
    if (excess > rep.worst_violation || !std::isfinite(excess)) {
      rep.worst_violation = std::isfinite(excess) ? excess : std::numeric_limits<double>::infinity();
      rep.worst_index = i;
    }
    if (!(excess <= tol.at(v))) ok = false;
  }
  rep.worst_sample = samples[rep.worst_index];
  rep.passed = ok;
  return rep;
}

std::string AssumptionTwoReport::summary() const {
  std::ostringstream os;
  os << "gradient bounds: " << samples << " samples, worst |dV/dz| excess " << worst_state_excess
     << " (sample " << worst_state_index << "), worst |dV/ddz| excess " << worst_disp_excess
     << " (sample " << worst_disp_index << "); "
     << (passed ? "no violation found at the sampled points" : "violated");
  return os.str();
}

AssumptionTwoReport verify_assumption2(const FinslerCandidate &cand,
                                       const AssumptionTwoBounds &bounds,
                                       const std::vector<StateDispSample> &samples,
                                       InequalityTolerance tol) {
  if (samples.empty()) throw std::invalid_argument("verify_assumption2: empty sample set");
  AssumptionTwoReport rep;
  rep.samples = samples.size();
  rep.worst_state_excess = -std::numeric_limits<double>::infinity();
  rep.worst_disp_excess = -std::numeric_limits<double>::infinity();
  bool ok = true;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto &[z, dz] = samples[i];
    require_dims(cand, z, dz, "verify_assumption2");
    const double gs = cand.grad_state(z, dz).norm();
    const double gd = cand.grad_disp(z, dz).norm();
    const double n = dz.norm();
    const double state_excess = gs - bounds.gamma(z) * n * n;
    const double disp_excess = gd - bounds.zeta(z) * n;
    if (state_excess > rep.worst_state_excess) {
      rep.worst_state_excess = state_excess;
      rep.worst_state_index = i;
    }
    if (disp_excess > rep.worst_disp_excess) {
      rep.worst_disp_excess = disp_excess;
      rep.worst_disp_index = i;
    }
    if (!(state_excess <= tol.at(gs)) || !(disp_excess <= tol.at(gd))) ok = false;
  }
  rep.passed = ok;
  return rep;
}

FinslerCandidate compose(const FinslerCandidate &first, const FinslerCandidate &second) {
  const int n = first.dim;
  const int m = second.dim;
  FinslerCandidate out;
  out.dim = n + m;
  out.c_lower = std::min(first.c_lower, second.c_lower);
  out.c_upper = std::max(first.c_upper, second.c_upper);
  out.value = [first, second, n, m](const Vector &z, const Vector &dz) {
    return first.value(z.head(n), dz.head(n)) + second.value(z.tail(m), dz.tail(m));
  };
  out.grad_state = [first, second, n, m](const Vector &z, const Vector &dz) {
    return join_state(first.grad_state(z.head(n), dz.head(n)),
                      second.grad_state(z.tail(m), dz.tail(m)));
  };
  out.grad_disp = [first, second, n, m](const Vector &z, const Vector &dz) {
    return join_state(first.grad_disp(z.head(n), dz.head(n)),
                      second.grad_disp(z.tail(m), dz.tail(m)));
  };
  return out;
}

}  // namespace incstab
