#include <benchmark/benchmark.h>

#include "dddm/kernels.hpp"
#include "dddm/rng.hpp"
#include "dddm/sampler.hpp"
#include "dddm/toy.hpp"

using namespace dddm;
using kernels::Exec;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed, 0);
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

void BM_Matmul(benchmark::State& state) {
  const Tensor a = random_tensor(512, 128, 1), b = random_tensor(128, 128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::matmul(a, b, exec_of(state)));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_MatmulTn(benchmark::State& state) {
  const Tensor a = random_tensor(512, 128, 1), b = random_tensor(512, 128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::matmul_tn(a, b, exec_of(state)));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_SlicedWasserstein(benchmark::State& state) {
  const Tensor a = random_tensor(2048, 16, 3), b = random_tensor(2048, 16, 4);
  for (auto _ : state) benchmark::DoNotOptimize(distribution_distance(a, b, 64, 0, exec_of(state)));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_ForwardPaths(benchmark::State& state) {
  const NoiseSchedule sched;
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_forward_moments(sched, {1.0, -0.5}, {0.2, 0.3}, 8192, 1e-3, {0.5, 1.0}, 0, exec_of(state)));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_ChainNoise(benchmark::State& state) {
  ChainNoise noise(4096, 16, 0, exec_of(state));
  for (auto _ : state) benchmark::DoNotOptimize(noise.draw(2, true));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}

}  // namespace

BENCHMARK(BM_Matmul)->Arg(0)->Arg(1);
BENCHMARK(BM_MatmulTn)->Arg(0)->Arg(1);
BENCHMARK(BM_SlicedWasserstein)->Arg(0)->Arg(1);
BENCHMARK(BM_ForwardPaths)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChainNoise)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
