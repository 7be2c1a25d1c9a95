#include <benchmark/benchmark.h>

#include "mrhydro/batch.hpp"
#include "mrhydro/synthesis.hpp"

namespace {

using namespace mrhydro;

const Experiment& experiment() {
  static const Experiment exp = [] {
    Experiment e;
    e.gains = synthesize(e.plant, e.settings.weights, e.settings.noise);
    return e;
  }();
  return exp;
}

std::vector<Scenario> jobs(int n) {
  std::vector<Scenario> out;
  for (int i = 0; i < n; ++i) {
    Scenario sc = Scenario::make_sine_dwell(kAllControllers[i % 5], 5.0 + 5.0 * (i / 5), 10);
    out.push_back(sc);
  }
  return out;
}

void BM_BatchSerial(benchmark::State& state) {
  const auto work = jobs(static_cast<int>(state.range(0)));
  const auto factory = experiment().factory();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_batch_serial(work, experiment().plant, factory));
  }
}

void BM_BatchParallel(benchmark::State& state) {
  const auto work = jobs(static_cast<int>(state.range(0)));
  const auto factory = experiment().factory();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_batch(work, experiment().plant, factory));
  }
}

BENCHMARK(BM_BatchSerial)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
