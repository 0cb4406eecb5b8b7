#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "layercode/chunking.hpp"
#include "layercode/polycode.hpp"

using namespace layercode;

namespace {

FieldMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, const FieldPrime& p) {
  FieldMatrix m(rows, cols, p);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m.set(r, c, rng() % p.value());
  return m;
}

// args: n1 (= n2), block width
void BM_Encode(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto w = static_cast<std::size_t>(state.range(1));
  const FieldPrime p(1000003);
  std::mt19937_64 rng(1);
  const auto a = random_matrix(rng, 32, n * w, p);
  const auto b = random_matrix(rng, 32, n * w, p);
  const CodeParams params{n, n, 1.06};
  for (auto _ : state) benchmark::DoNotOptimize(encode(a, b, params));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * params.num_tasks()));
}
BENCHMARK(BM_Encode)->Args({2, 8})->Args({4, 8})->Args({8, 4});

void BM_Decode(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto w = static_cast<std::size_t>(state.range(1));
  const FieldPrime p(1000003);
  std::mt19937_64 rng(2);
  const CodeParams params{n, n, 1.06};
  const auto tasks = encode(random_matrix(rng, 32, n * w, p), random_matrix(rng, 32, n * w, p), params);
  std::vector<TaskResult> results;
  for (std::size_t t = tasks.size() - params.k(); t < tasks.size(); ++t) results.push_back(execute(tasks[t]));
  for (auto _ : state) benchmark::DoNotOptimize(decode(results, params));
}
BENCHMARK(BM_Decode)->Args({2, 8})->Args({4, 8})->Args({8, 4});

void BM_LayeredAssembly(benchmark::State& state) {
  const ChunkParams params{2, 8, static_cast<unsigned>(state.range(0))};
  std::mt19937_64 rng(3);
  IntMatrix a(64, 64, 0), b(64, 64, 0);
  const auto limit = static_cast<std::uint64_t>(params.element_limit());
  for (auto& e : a.data()) e = rng() % limit;
  for (auto& e : b.data()) e = rng() % limit;
  const auto ca = decompose(a, params), cb = decompose(b, params);
  MiniJobResults results;
  for (const auto& job : all_mini_jobs(params.m)) results.emplace(job, mini_job_product(ca, cb, job));
  for (auto _ : state) benchmark::DoNotOptimize(resolution_assemble(results, params.layers() - 1, params));
}
BENCHMARK(BM_LayeredAssembly)->Arg(1)->Arg(2)->Arg(4);

}  // namespace
