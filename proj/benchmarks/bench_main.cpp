#include "incstab/estimator.hpp"
#include "incstab/fhn.hpp"
#include "incstab/invariance.hpp"
#include "incstab/smallgain.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace incstab;

namespace {

IntegratorConfig rk4(double step, double horizon) {
  IntegratorConfig c;
  c.step = step;
  c.max_time = horizon;
  return c;
}

Vector pair_point(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

void BM_IntegrateFhn(benchmark::State &state) {
  const auto field = assemble(fhn::fhn_field(fhn::figure_params(2)));
  const auto cfg = rk4(1e-3, static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(integrate(field, 0.0, pair_point(2.0, 0.0), cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 1000);
}
BENCHMARK(BM_IntegrateFhn)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_IntegrateWithDisplacement(benchmark::State &state) {
  const auto field = assemble(fhn::fhn_field(fhn::figure_params(2)));
  const auto cfg = rk4(1e-3, 10.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        integrate_with_displacement(field, 0.0, pair_point(2.0, 0.0), pair_point(0.6, -0.8), cfg));
}
BENCHMARK(BM_IntegrateWithDisplacement)->Unit(benchmark::kMillisecond);

void BM_AdaptiveFhn(benchmark::State &state) {
  const auto field = assemble(fhn::fhn_field(fhn::figure_params(3)));
  IntegratorConfig cfg;
  cfg.method = IntegratorMethod::adaptive_embedded;
  cfg.max_time = 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(integrate(field, 0.0, pair_point(3.0, 3.0), cfg));
}
BENCHMARK(BM_AdaptiveFhn)->Unit(benchmark::kMillisecond);

void BM_BuildFc(benchmark::State &state) {
  const auto p = fhn::FhnParams::from_r(2.1, 1.0, 0.1, 1.0, 1.0, 1.0);
  fhn::QuadratureConfig cfg;
  cfg.table_points = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fhn::build_fc(p, cfg));
}
BENCHMARK(BM_BuildFc)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_InvariantLevel(benchmark::State &state) {
  const auto p = fhn::figure_params(3);
  const auto field = assemble(fhn::fhn_field(p));
  const auto w = fhn_outer_lyapunov(p);
  for (auto _ : state) benchmark::DoNotOptimize(find_invariant_level(w, field));
}
BENCHMARK(BM_InvariantLevel)->Unit(benchmark::kMillisecond);

void BM_Certify(benchmark::State &state) {
  const auto p = fhn::figure_params(2);
  const auto table = std::make_shared<const fhn::FcTable>(fhn::build_fc(p));
  CertifyRequest req;
  req.radius = 5.0;
  req.alpha1 = fhn::v1_rate(*table);
  req.alpha2 = fhn::v2_rate(p);
  req.alpha = 0.5 * std::min(req.alpha1, req.alpha2);
  req.grid_density = static_cast<int>(state.range(0));
  req.decay_samples = 2000;
  for (auto _ : state)
    benchmark::DoNotOptimize(certify(fhn::fhn_field(p), fhn::v1_candidate(table), fhn::v2_candidate(),
                                     fhn::v1_bounds(table), fhn::v2_bounds(), req));
}
BENCHMARK(BM_Certify)->Arg(51)->Arg(201)->Unit(benchmark::kMillisecond);

}  // namespace
