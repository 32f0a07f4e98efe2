#include <benchmark/benchmark.h>

#include "optomech/dynamics.hpp"
#include "optomech/langevin.hpp"
#include "optomech/model.hpp"
#include "optomech/omit.hpp"

using namespace optomech;

namespace {

struct Reference {
  SystemParams sys = reference_system();
  DriveConfig drive = reference_drive(sys);
  EffectiveCouplings couplings = effective_couplings(sys, drive);
  EnvelopeConfig env = envelope_config(sys, couplings, drive);
};

const Reference& reference() {
  static const Reference r;
  return r;
}

}  // namespace

static void BM_SteadyCovariance(benchmark::State& state) {
  const Reference& r = reference();
  const DriftMatrix a = drift_matrix(r.sys, r.couplings, r.drive);
  const DiffusionMatrix d = diffusion_matrix(r.sys.gamma_m, r.sys.n_bath);
  for (auto _ : state) benchmark::DoNotOptimize(solve_steady_covariance(a, d));
}
BENCHMARK(BM_SteadyCovariance);

static void BM_ThresholdBisection(benchmark::State& state) {
  const Reference& r = reference();
  for (auto _ : state) benchmark::DoNotOptimize(instability_threshold(r.sys, r.drive, r.drive.beta_t));
}
BENCHMARK(BM_ThresholdBisection);

// Cost per Euler–Maruyama step, reported as items/s.
static void BM_EulerMaruyama(benchmark::State& state) {
  const Reference& r = reference();
  StochasticSettings s;
  s.dt = 1e-5;
  s.n_traj = static_cast<std::size_t>(state.range(0));
  s.t_end = 1000 * s.dt;
  s.record_stride = 1000;
  s.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(integrate_stochastic(r.env, s));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 1000);
}
BENCHMARK(BM_EulerMaruyama)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_OmitFit(benchmark::State& state) {
  const Reference& r = reference();
  const OmitSpectrum spec = synthesize_spectrum(
      r.sys, r.drive, Mode::control,
      omit_window(r.sys, r.drive, Mode::control, static_cast<std::size_t>(state.range(0))));
  SystemParams start = r.sys;
  start.gamma_m[0] *= 1.3;
  start.g0[0] *= 0.8;
  for (auto _ : state) benchmark::DoNotOptimize(fit_omit(spec, start, Mode::control));
}
BENCHMARK(BM_OmitFit)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
