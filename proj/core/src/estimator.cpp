#include "incstab/estimator.hpp"

#include "incstab/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <exception>
#include <mutex>
#include <thread>

namespace incstab {

namespace {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn &&fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        try {
          for (std::size_t i = next++; i < count; i = next++) fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char *to_string(Verdict v) {
  switch (v) {
    case Verdict::contracting: return "contracting";
    case Verdict::non_contracting: return "non_contracting";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

EnvelopeFit fit_envelope(const std::vector<double> &times, const std::vector<double> &distance,
                         const FitOptions &opt) {
  if (times.size() != distance.size() || times.size() < 3)
    throw std::invalid_argument("fit_envelope: need at least 3 matching samples");
  for (double d : distance)
    if (!std::isfinite(d) || d < 0.0) throw std::invalid_argument("fit_envelope: series is not finite");
  const double d0 = distance.front();
  if (!(d0 > 0.0)) throw std::invalid_argument("fit_envelope: d(t0) = 0 (identical initial conditions)");
  const double t0 = times.front();
  const double t_end = times.back();
  const std::size_t n = times.size();

  // Resolved part of the series: up to the first sample at integrator resolution.
  std::size_t resolved = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (distance[i] < opt.resolution_floor * d0) {
      resolved = i;
      break;
    }
  }
  const std::size_t last = std::max(resolved, std::min<std::size_t>(n, 3));  // exclusive
  const double t_resolved = times[last - 1];
  const double start_time = t0 + opt.transient_skip * (t_resolved - t0);
  auto first = static_cast<std::size_t>(
      std::lower_bound(times.begin(), times.begin() + static_cast<long>(last), start_time) -
      times.begin());
  if (last - first < 3) first = last - 3;

  EnvelopeFit fit;
  fit.window_start = times[first];
  fit.window_end = times[last - 1];
  fit.window_samples = last - first;

  // Least squares on (t - t0, log d); zero distances are clamped to the floor.
  const double log_floor = std::log(std::max(opt.resolution_floor * d0, std::numeric_limits<double>::min()));
  const auto logd = [&](std::size_t i) {
    return distance[i] > 0.0 ? std::max(std::log(distance[i]), log_floor) : log_floor;
  };
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    const double t = times[i] - t0;
    const double l = logd(i);
    st += t;
    sl += l;
    stt += t * t;
    stl += t * l;
  }
  const double cnt = static_cast<double>(last - first);
  const double denom = cnt * stt - st * st;
  const double slope = denom > 0.0 ? (cnt * stl - st * sl) / denom : 0.0;
  const double intercept = (sl - slope * st) / cnt;
  fit.lambda = -slope;

  double rss = 0.0;
  double max_excess = -std::numeric_limits<double>::infinity();
  const double log_d0 = std::log(d0);
  for (std::size_t i = first; i < last; ++i) {
    const double t = times[i] - t0;
    const double l = logd(i);
    const double r = l - (intercept + slope * t);
    rss += r * r;
    max_excess = std::max(max_excess, l + fit.lambda * t - log_d0);
  }
  fit.residual = std::sqrt(rss / cnt);
  fit.K = std::max(1.0, std::exp(max_excess));

  const double late_start = t_end - opt.late_fraction * (t_end - t0);
  double late_sum = 0.0;
  std::size_t late_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (times[i] < late_start) continue;
    late_sum += distance[i];
    ++late_count;
  }
  fit.late_ratio = late_count ? late_sum / static_cast<double>(late_count) / d0 : 0.0;

  if (fit.lambda > opt.lambda_min && fit.residual < opt.residual_max)
    fit.verdict = Verdict::contracting;
  else if (fit.late_ratio > opt.late_floor)
    fit.verdict = Verdict::non_contracting;
  else
    fit.verdict = Verdict::inconclusive;
  return fit;
}

EnvelopeFit fit_envelope(const DistanceSeries &series, const FitOptions &options) {
  return fit_envelope(series.times, series.distance, options);
}

EnsembleReport ensemble_ies(const TimeVaryingField &field,
                            const std::vector<std::pair<Vector, Vector>> &pairs, double t0,
                            const IntegratorConfig &config, const EnsembleOptions &options) {
  if (pairs.empty()) throw std::invalid_argument("ensemble_ies: no pairs");
  for (const auto &[a, b] : pairs)
    if (!((a - b).norm() > 0.0)) throw std::invalid_argument("ensemble_ies: pair with zero separation");

  EnsembleReport rep;
  rep.pairs.resize(pairs.size());
  parallel_for(pairs.size(), options.threads, [&](std::size_t i) {
    PairResult &out = rep.pairs[i];
    out.z1 = pairs[i].first;
    out.z2 = pairs[i].second;
    DistanceSeries series = flow_difference(field, t0, out.z1, out.z2, config);
    out.blow_up = series.blow_up;
    if (!out.blow_up) out.fit = fit_envelope(series, options.fit);
    if (options.keep_series) out.series = std::move(series);
  });

  rep.min_lambda = std::numeric_limits<double>::infinity();
  for (const auto &p : rep.pairs) {
    if (p.blow_up) {
      rep.any_blow_up = true;
      ++rep.inconclusive;
      continue;
    }
    rep.min_lambda = std::min(rep.min_lambda, p.fit.lambda);
    rep.max_K = std::max(rep.max_K, p.fit.K);
    switch (p.fit.verdict) {
      case Verdict::contracting: ++rep.contracting; break;
      case Verdict::non_contracting: ++rep.non_contracting; break;
      case Verdict::inconclusive: ++rep.inconclusive; break;
    }
  }
  if (!std::isfinite(rep.min_lambda)) rep.min_lambda = 0.0;
  rep.passed = !rep.any_blow_up && rep.contracting == rep.pairs.size();
  return rep;
}

WiesEnsembleReport wies_scan(const TimeVaryingField &field, const std::vector<double> &radii,
                             std::size_t pairs_per_radius, double t0,
                             const IntegratorConfig &config, std::uint64_t seed,
                             const EnsembleOptions &options) {
  if (radii.empty()) throw std::invalid_argument("wies_scan: empty radius list");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("wies_scan: radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1]))
      throw std::invalid_argument("wies_scan: radii must be strictly increasing");
  }
  WiesEnsembleReport rep;
  rep.radii = radii;
  rep.lambda_floor = std::numeric_limits<double>::infinity();
  rep.all_contracting = true;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const auto pairs = random_pairs_on_sphere(field.dim, radii[k], pairs_per_radius, seed + k);
    const EnsembleReport ens = ensemble_ies(field, pairs, t0, config, options);
    rep.any_blow_up = rep.any_blow_up || ens.any_blow_up;
    rep.all_contracting = rep.all_contracting && ens.passed;
    const PairResult *worst = nullptr;
    for (const auto &p : ens.pairs) {
      if (p.blow_up) continue;
      if (!worst || p.fit.lambda < worst->fit.lambda) worst = &p;
    }
    rep.per_radius_fits.push_back(worst ? worst->fit : EnvelopeFit{});
    rep.gain_profile.push_back(ens.max_K);
    if (worst) rep.lambda_floor = std::min(rep.lambda_floor, worst->fit.lambda);
  }
  if (!std::isfinite(rep.lambda_floor)) rep.lambda_floor = 0.0;
  rep.passed = rep.lambda_floor > 0.0 && rep.all_contracting && !rep.any_blow_up;
  return rep;
}

void write_distance_csv(std::ostream &os, const EnsembleReport &report) {
  for (const auto &p : report.pairs)
    if (p.series.times.empty())
      throw std::invalid_argument("write_distance_csv: series were not kept (keep_series)");
  os << "pair_id,t,distance\n";
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    const auto &s = report.pairs[i].series;
    for (std::size_t k = 0; k < s.times.size(); ++k)
      os << i << ',' << fmt_double(s.times[k]) << ',' << fmt_double(s.distance[k]) << '\n';
  }
}

void write_summary_csv(std::ostream &os, const EnsembleReport &report) {
  os << "pair_id,K,lambda,verdict\n";
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    const auto &p = report.pairs[i];
    os << i << ',' << fmt_double(p.fit.K) << ',' << fmt_double(p.fit.lambda) << ','
       << (p.blow_up ? "blow_up" : to_string(p.fit.verdict)) << '\n';
  }
}

}  // namespace incstab
