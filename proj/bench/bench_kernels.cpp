#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dialdiv/kernels.hpp"

using namespace dialdiv::kernels;

namespace {

std::vector<double> random_values(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// 32 layers x 32 heads, a 40-token unit, 60 response tokens
constexpr std::size_t kL = 32, kH = 32, kM = 40, kN = 60;

template <bool Parallel>
void BM_Reduce(benchmark::State& state) {
  const auto v = random_values(kL * kH * kM * kN);
  std::vector<double> out(kL * kH);
  for (auto _ : state) {
    if constexpr (Parallel) reduce_tensor(v, kL, kH, kM, kN, Reducer::kSumMean, out);
    else serial::reduce_tensor(v, kL, kH, kM, kN, Reducer::kSumMean, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * v.size() * sizeof(double)));
}

template <bool Parallel>
void BM_PairwiseCosine(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 256;
  const auto v = random_values(n * dim);
  for (auto _ : state) {
    double s = Parallel ? mean_pairwise_cosine(v, n, dim) : serial::mean_pairwise_cosine(v, n, dim);
    benchmark::DoNotOptimize(s);
  }
}

}  // namespace

BENCHMARK(BM_Reduce<true>)->Name("reduce/omp");
BENCHMARK(BM_Reduce<false>)->Name("reduce/serial");
BENCHMARK(BM_PairwiseCosine<true>)->Name("pairwise_cosine/omp")->Arg(10)->Arg(200);
BENCHMARK(BM_PairwiseCosine<false>)->Name("pairwise_cosine/serial")->Arg(10)->Arg(200);

BENCHMARK_MAIN();
