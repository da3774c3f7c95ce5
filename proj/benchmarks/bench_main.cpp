#include <benchmark/benchmark.h>

#include "gridwit/real.hpp"

static void BM_RealMul(benchmark::State& state) {
  gridwit::Real a = gridwit::Real::of_decimal("1.234567891011", 256);
  gridwit::Real b = gridwit::Real::of_decimal("9.876543210987", 256);
  for (auto _ : state) {
    gridwit::Real c = a * b;
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_RealMul);

BENCHMARK_MAIN();
