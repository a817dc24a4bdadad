#include <benchmark/benchmark.h>

#include <vector>

#include "nlos/forward_sim.hpp"
#include "nlos/histproc.hpp"
#include "nlos/localization.hpp"
#include "nlos/peak_fit.hpp"
#include "nlos/studies.hpp"

namespace {

using namespace nlos;

Scene four_pixel_scene() {
  SceneSpec s;
  s.laser_spot = {0.0, 0.0, 1.0};
  s.pixels = {{-0.9, 0.0, 1.0}, {-0.3, 0.0, 1.0}, {0.4, 0.0, 1.0}, {1.0, 0.0, 1.0}};
  s.objects = {{{0.5, 1.2, 1.0}, 1.0, "person"}};
  s.scatter_height_z = 1.0;
  return Scene(s);
}

PeakEstimate peak(double t) {
  PeakEstimate p;
  p.t_s = t;
  p.sigma_s = 120e-12;
  p.amplitude = 100.0;
  p.t_stderr_s = 12e-12;
  return p;
}

void BM_Backproject(benchmark::State& state) {
  const double res = 0.01 * static_cast<double>(state.range(0));
  const GridSpec g{-3.0, 3.0, 0.0, 4.0, res, 1.0};
  const Point3 l{0.0, 0.0, 1.0}, i{0.6, 0.0, 1.0};
  const auto pk = peak(time_of_flight(l, {0.5, 1.2, 1.0}, i));
  for (auto _ : state) benchmark::DoNotOptimize(backproject(pk, l, i, g));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.cells()));
}
BENCHMARK(BM_Backproject)->Arg(1)->Arg(2)->Arg(5);

void BM_FuseFourMaps(benchmark::State& state) {
  const GridSpec g{-3.0, 3.0, 0.0, 4.0, 0.02, 1.0};
  const Scene sc = four_pixel_scene();
  std::vector<ProbabilityMap> maps;
  for (const auto& px : sc.pixels()) {
    maps.push_back(backproject(peak(time_of_flight(sc.laser_spot(), sc.objects()[0].position, px)),
                               sc.laser_spot(), px, g));
  }
  for (auto _ : state) benchmark::DoNotOptimize(localize(fuse(maps)));
}
BENCHMARK(BM_FuseFourMaps);

void BM_SimulateHistogram(benchmark::State& state) {
  const Scene sc = four_pixel_scene();
  AcquisitionParams p;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    p.rng_seed = ++seed;
    benchmark::DoNotOptimize(simulate_histogram(sc, 0, p));
  }
}
BENCHMARK(BM_SimulateHistogram);

void BM_DetectAndFit(benchmark::State& state) {
  const Scene sc = four_pixel_scene();
  AcquisitionParams p;
  p.rng_seed = 5;
  const double delay = standoff_delay_s(sc.standoff_m(), p.period_s());
  const TimeWindow w{0.0, 24e-9};
  const auto signal = crop(apply_offset(simulate_histogram(sc, 0, p), -delay), w);
  const auto bg = crop(apply_offset(simulate_background(sc, 0, p), -delay), w);
  const auto clean = subtract_background(signal, bg);
  for (auto _ : state) {
    const auto seeds = detect_peaks(clean, {});
    benchmark::DoNotOptimize(fit_peaks(clean, seeds, {}));
  }
}
BENCHMARK(BM_DetectAndFit);

void BM_RunScenario(benchmark::State& state) {
  const Scene sc = four_pixel_scene();
  const GridSpec g{-3.0, 3.0, 0.0, 4.0, 0.02, 1.0};
  AcquisitionParams p;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    p.rng_seed = ++seed;
    benchmark::DoNotOptimize(run_scenario(sc, p, g));
  }
}
BENCHMARK(BM_RunScenario)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
