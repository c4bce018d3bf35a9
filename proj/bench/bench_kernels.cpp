// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "dastnet/kernels.hpp"
#include "dastnet/rng.hpp"

namespace {

using Kernel = void (*)(std::span<const double>, std::span<const double>, std::span<double>, std::size_t,
                        std::size_t, std::size_t);

std::vector<double> random_buffer(std::size_t n, std::uint64_t seed) {
  dastnet::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void run(benchmark::State& state, Kernel kernel) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_buffer(n * n, 1);
  const auto b = random_buffer(n * n, 2);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    kernel(a, b, out, n, n, n);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}

void BM_MatmulSerial(benchmark::State& s) { run(s, dastnet::kernels::serial::matmul); }
void BM_MatmulParallel(benchmark::State& s) { run(s, dastnet::kernels::parallel::matmul); }
void BM_MatmulNtSerial(benchmark::State& s) { run(s, dastnet::kernels::serial::matmul_nt); }
void BM_MatmulNtParallel(benchmark::State& s) { run(s, dastnet::kernels::parallel::matmul_nt); }
void BM_MatmulTnSerial(benchmark::State& s) { run(s, dastnet::kernels::serial::matmul_tn); }
void BM_MatmulTnParallel(benchmark::State& s) { run(s, dastnet::kernels::parallel::matmul_tn); }

BENCHMARK(BM_MatmulSerial)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_MatmulParallel)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_MatmulNtSerial)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_MatmulNtParallel)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_MatmulTnSerial)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_MatmulTnParallel)->RangeMultiplier(2)->Range(32, 256);

}  // namespace

BENCHMARK_MAIN();
