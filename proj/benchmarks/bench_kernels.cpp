#include <benchmark/benchmark.h>

#include <random>

#include "hypercone/domination.hpp"
#include "hypercone/exterior.hpp"
#include "hypercone/flow.hpp"
#include "hypercone/forms.hpp"
#include "hypercone/matcore.hpp"

namespace {

using hypercone::matcore::SquareMatrix;

SquareMatrix random_matrix(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SquareMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
  return a;
}

void BM_SymEig(benchmark::State& state) {
  const std::size_t n = state.range(0);
  SquareMatrix a = random_matrix(n, 1);
  a = a * a.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(hypercone::matcore::sym_eig(a));
}
BENCHMARK(BM_SymEig)->Arg(3)->Arg(6)->Arg(10);

void BM_Svd(benchmark::State& state) {
  const SquareMatrix a = random_matrix(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(hypercone::matcore::svd(a));
}
BENCHMARK(BM_Svd)->Arg(3)->Arg(6)->Arg(10);

void BM_Expm(benchmark::State& state) {
  const SquareMatrix a = random_matrix(state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(hypercone::matcore::expm(a, 1.0));
}
BENCHMARK(BM_Expm)->Arg(3)->Arg(6)->Arg(10);

void BM_Compound(benchmark::State& state) {
  const SquareMatrix a = random_matrix(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(hypercone::exterior::compound(a, 2));
}
BENCHMARK(BM_Compound)->Arg(4)->Arg(6)->Arg(8);

void BM_AdditiveCompound(benchmark::State& state) {
  const SquareMatrix a = random_matrix(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(hypercone::exterior::additive_compound(a, 2));
}
BENCHMARK(BM_AdditiveCompound)->Arg(4)->Arg(6)->Arg(8);

void BM_DeltaInterval(benchmark::State& state) {
  const hypercone::forms::QuadraticForm j(SquareMatrix::diagonal({1.0, -1.0, 1.0}));
  const SquareMatrix d = SquareMatrix::diagonal({1.0, -3.0, -0.5});
  for (auto _ : state) benchmark::DoNotOptimize(hypercone::forms::delta_interval(j, d));
}
BENCHMARK(BM_DeltaInterval);

void BM_IntegrateLorenz(benchmark::State& state) {
  const auto model = hypercone::flow::model_classic_lorenz(10.0, 28.0, 8.0 / 3.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        hypercone::flow::integrate(model, {1.0, 1.0, 1.0}, 1.0, 1e-3));
  }
}
BENCHMARK(BM_IntegrateLorenz);

}  // namespace

BENCHMARK_MAIN();
