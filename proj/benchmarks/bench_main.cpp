#include <benchmark/benchmark.h>

#include "kst/analytic_generators.hpp"
#include "kst/kernel_basis.hpp"
#include "kst/leja_expm.hpp"
#include "kst/rng.hpp"
#include "kst/sparse_matrix.hpp"

namespace {

using namespace kst;

SparseComplexMatrix make_generator(Index ell) {
  VortexParams p;
  return assemble_generator_analytic(p, TruncationParams::fourier(ell, ell, ell), 1e-5).L;
}

void bm_sparse_matvec(benchmark::State& state) {
  const auto l = make_generator(state.range(0));
  CounterRng rng(1);
  CVector x(static_cast<std::size_t>(l.ncols())), y(static_cast<std::size_t>(l.nrows()));
  for (auto& v : x) v = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
  for (auto _ : state) {
    l.matvec(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * l.nnz());
}
BENCHMARK(bm_sparse_matvec)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

void bm_assemble_moving(benchmark::State& state) {
  VortexParams p;
  const auto t = TruncationParams::fourier(state.range(0), state.range(0), state.range(0));
  for (auto _ : state) {
    auto g = assemble_generator_analytic(p, t, 1e-5);
    benchmark::DoNotOptimize(g.L.nnz());
  }
}
BENCHMARK(bm_assemble_moving)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void bm_bessel_ratio(benchmark::State& state) {
  double acc = 0.0;
  for (auto _ : state) {
    for (Index n = 0; n < 16; ++n) acc += bessel_ratio(n, 0.5);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(bm_bessel_ratio);

void bm_expm_action(benchmark::State& state) {
  const auto l = make_generator(4);
  CounterRng rng(2);
  CVector b(static_cast<std::size_t>(l.ncols()));
  for (auto& v : b) v = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
  for (auto _ : state) {
    auto y = expm_action(l, b, 0.5, 1e-7);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(bm_expm_action)->Unit(benchmark::kMillisecond);

void bm_kernel_row_selection(benchmark::State& state) {
  const Index n = state.range(0);
  CounterRng rng(3);
  SnapshotSet s;
  s.tau = 0.01;
  s.data.resize(n, 8);
  for (Index i = 0; i < s.data.size(); ++i) s.data.data()[i] = rng.uniform(-1, 1);
  const auto rt = knn_bandwidth(s, 8);
  for (auto _ : state) {
    auto kernel = build_markov(s, rt, 0.5, std::max<Index>(32, n / 10));
    benchmark::DoNotOptimize(kernel.p_hat.vals.data());
  }
}
BENCHMARK(bm_kernel_row_selection)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
