#include <benchmark/benchmark.h>

#include "qspec/limit_theorems.hpp"
#include "qspec/spectral.hpp"
#include "qspec/transfer_op.hpp"

using namespace qspec;

namespace {

TwistedCocycle mixed_cocycle(std::size_t n_cells) {
  return TwistedCocycle(MapFamily({PiecewiseLinearMap::doubling(), PiecewiseLinearMap::tripling()}),
                        DrivingSystem::bernoulli({0.5, 0.5}, 1), Observable::cosine(), n_cells);
}

void BM_BuildUlam(benchmark::State& state) {
  const auto map = PiecewiseLinearMap::from_spec("affine: 0,0.5,2,0; 0.5,1,1.5,-0.75");
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_ulam(map, n));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildUlam)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_TwistedStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = mixed_cocycle(n);
  const auto slice = c.at(Complex(state.range(1) ? 0.1 : 0.0, 0.0));
  std::vector<Complex> in(n, 1.0), out(n);
  std::int64_t t = 0;
  for (auto _ : state) {
    slice.step(t++, in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TwistedStep)->ArgsProduct({{1024, 4096}, {0, 1}})->ArgNames({"N", "twisted"});

void BM_LyapunovPoint(benchmark::State& state) {
  const auto c = mixed_cocycle(4096);
  for (auto _ : state) benchmark::DoNotOptimize(lyapunov_exponent(c, 0.1, 2000, 256, 0).value);
}
BENCHMARK(BM_LyapunovPoint)->Unit(benchmark::kMillisecond);

void BM_BirkhoffSamples(benchmark::State& state) {
  const auto c = mixed_cocycle(1024);
  SampleParams p;
  p.n = static_cast<std::size_t>(state.range(0));
  p.count = 10000;
  p.start_law = StartLaw::lebesgue;
  for (auto _ : state) benchmark::DoNotOptimize(birkhoff_samples(c, p).sums.data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.n * p.count));
}
BENCHMARK(BM_BirkhoffSamples)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
