#include <benchmark/benchmark.h>

#include "layercode/simulator.hpp"

using namespace layercode;

namespace {

// args: k, m. Complexity is rescaled so the job workload stays fixed.
void BM_Simulate(benchmark::State& state) {
  SimConfig cfg;
  cfg.k = static_cast<std::size_t>(state.range(0));
  cfg.m = static_cast<unsigned>(state.range(1));
  cfg.task_complexity_unlayered = 50000.0 / static_cast<double>(cfg.k);
  cfg.omega = 1.06;
  cfg.num_jobs = 500;
  std::size_t events = 0;
  for (auto _ : state) {
    const auto r = run(cfg);
    events += r.diagnostics.events;
    benchmark::DoNotOptimize(r.jobs.data());
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->Args({100, 1})->Args({100, 2})->Args({1000, 2})->Unit(benchmark::kMillisecond);

void BM_SimulatePayload(benchmark::State& state) {
  SimConfig cfg;
  cfg.k = 16;
  cfg.task_complexity_unlayered = 50000.0 / 16.0;
  cfg.omega = 1.25;
  cfg.num_jobs = 100;
  cfg.payload = PayloadConfig{8, 2, 8};
  for (auto _ : state) benchmark::DoNotOptimize(run(cfg).diagnostics.payload_checks);
}
BENCHMARK(BM_SimulatePayload)->Unit(benchmark::kMillisecond);

}  // namespace
