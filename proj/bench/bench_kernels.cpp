#include <benchmark/benchmark.h>

#include "adaedit/kernels.hpp"
#include "adaedit/latent.hpp"

using namespace adaedit;

namespace {

Matrix random_matrix(int r, int c, std::uint64_t seed) {
  SeededRng rng(seed);
  Matrix m(r, c);
  for (double& x : m.data) x = rng.normal();
  return m;
}

void BM_MatmulParallel(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::matmul(a, b));
  st.SetComplexityN(n);
}

void BM_MatmulReference(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::reference::matmul(a, b));
  st.SetComplexityN(n);
}

void BM_AttentionParallel(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const Matrix q = random_matrix(n, 64, 3), k = random_matrix(n, 64, 4), v = random_matrix(n, 64, 5);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::attention(q, k, v, 4));
}

void BM_AttentionReference(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const Matrix q = random_matrix(n, 64, 3), k = random_matrix(n, 64, 4), v = random_matrix(n, 64, 5);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::reference::attention(q, k, v, 4));
}

}  // namespace

BENCHMARK(BM_MatmulParallel)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_MatmulReference)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_AttentionParallel)->RangeMultiplier(2)->Range(20, 320);
BENCHMARK(BM_AttentionReference)->RangeMultiplier(2)->Range(20, 320);

BENCHMARK_MAIN();
