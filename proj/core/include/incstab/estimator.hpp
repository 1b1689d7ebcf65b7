#pragma once

#include "incstab/dynsys.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace incstab {

enum class Verdict { contracting, non_contracting, inconclusive };

const char *to_string(Verdict v);

struct FitOptions {
  /// Fraction of the (resolved) horizon skipped before fitting.
  double transient_skip = 0.2;
  double lambda_min = 1e-3;
  /// Non-contracting when the late-window mean distance exceeds late_floor * d(t0).
  double late_floor = 0.05;
  /// Late window is the final `late_fraction` of the horizon.
  double late_fraction = 0.2;
  /// RMS log-residual threshold.
  double residual_max = 0.5;
  /// Distances below resolution_floor * d(t0) are at integrator resolution;
  /// the fit window ends at the first such sample.
  double resolution_floor = 1e-10;
};

/// Empirical envelope d(t) <= K exp(-lambda (t - t0)) d(t0).
struct EnvelopeFit {
  double K = 1.0;
  double lambda = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  std::size_t window_samples = 0;
  double residual = 0.0;
  /// Late-window mean distance divided by d(t0).
  double late_ratio = 0.0;
  Verdict verdict = Verdict::inconclusive;
};

/// Least-squares fit of log d(t) on the post-transient window; lambda is minus
/// the slope and K = max over the window of d(t) e^{lambda (t - t0)} / d(t0),
/// clamped to >= 1. Throws std::invalid_argument when d(t0) = 0 or the series
/// is not finite.
EnvelopeFit fit_envelope(const std::vector<double> &times, const std::vector<double> &distance,
                         const FitOptions &options = {});
EnvelopeFit fit_envelope(const DistanceSeries &series, const FitOptions &options = {});

struct PairResult {
  Vector z1;
  Vector z2;
  EnvelopeFit fit;
  bool blow_up = false;
  DistanceSeries series;  // kept only when requested
};

struct EnsembleReport {
  std::vector<PairResult> pairs;
  double min_lambda = 0.0;
  double max_K = 1.0;
  std::size_t contracting = 0;
  std::size_t non_contracting = 0;
  std::size_t inconclusive = 0;
  bool any_blow_up = false;
  /// All pairs contracting and no blow-up.
  bool passed = false;
};

struct EnsembleOptions {
  FitOptions fit;
  bool keep_series = false;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Integrates every pair, fits an envelope per pair and aggregates in pair order.
EnsembleReport ensemble_ies(const TimeVaryingField &field,
                            const std::vector<std::pair<Vector, Vector>> &pairs, double t0,
                            const IntegratorConfig &config, const EnsembleOptions &options = {});

struct WiesEnsembleReport {
  std::vector<double> radii;
  /// Fit with the smallest lambda at each radius.
  std::vector<EnvelopeFit> per_radius_fits;
  /// Largest fitted K at each radius, as measured (no monotone envelope is imposed).
  std::vector<double> gain_profile;
  double lambda_floor = 0.0;
  bool all_contracting = false;
  bool any_blow_up = false;
  /// lambda_floor > 0, every pair contracting and no blow-up.
  bool passed = false;
};

/// For each radius, draws `pairs_per_radius` seeded pairs on the sphere of that
/// radius and fits their envelopes. Radii must be strictly increasing.
WiesEnsembleReport wies_scan(const TimeVaryingField &field, const std::vector<double> &radii,
                             std::size_t pairs_per_radius, double t0,
                             const IntegratorConfig &config, std::uint64_t seed,
                             const EnsembleOptions &options = {});

/// CSV rows (pair_id, t, distance); requires keep_series.
void write_distance_csv(std::ostream &os, const EnsembleReport &report);
/// CSV rows (pair_id, K, lambda, verdict).
void write_summary_csv(std::ostream &os, const EnsembleReport &report);

}  // namespace incstab
