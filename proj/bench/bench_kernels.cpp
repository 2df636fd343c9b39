// Serial reference vs OpenMP kernels, plus whole fits on each backend.
// Run with OMP_NUM_THREADS to vary the thread count.
#include <benchmark/benchmark.h>

#include <random>

#include "rbin/background.hpp"
#include "rbin/kernels.hpp"
#include "rbin/synth.hpp"
#include "rbin/threshold.hpp"

using namespace rbin;

namespace {

struct Inputs {
  Matrix r, w;
  Vector u, v;
};

Inputs make_inputs(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Inputs in{Matrix(n, n), Matrix(n, n), Vector(n), Vector(n)};
  for (double& x : in.r.values()) x = d(rng);
  for (double& x : in.w.values()) x = 0.1 + 0.9 * d(rng);
  for (double& x : in.u) x = d(rng);
  for (double& x : in.v) x = d(rng);
  return in;
}

kernels::Backend backend_of(const benchmark::State& st) {
  return st.range(1) ? kernels::Backend::kOpenMP : kernels::Backend::kSerial;
}

void label(benchmark::State& st) {
  st.SetLabel(st.range(1) ? (kernels::openmp_available() ? "omp" : "omp (unavailable, serial)") : "serial");
  st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(0));
}

void BM_HuberWeights(benchmark::State& st) {
  Inputs in = make_inputs(std::size_t(st.range(0)));
  const auto& k = kernels::select(backend_of(st));
  for (auto _ : st) {
    k.huber_weights(in.r, in.u, in.v, 0.1, in.w);
    benchmark::DoNotOptimize(in.w.values().data());
  }
  label(st);
}

void BM_RowNormal(benchmark::State& st) {
  Inputs in = make_inputs(std::size_t(st.range(0)));
  const auto& k = kernels::select(backend_of(st));
  Vector a(in.r.rows()), b(in.r.rows());
  for (auto _ : st) {
    k.row_normal(in.r, in.w, in.v, a, b);
    benchmark::DoNotOptimize(a.data());
  }
  label(st);
}

void BM_ColNormal(benchmark::State& st) {
  Inputs in = make_inputs(std::size_t(st.range(0)));
  const auto& k = kernels::select(backend_of(st));
  Vector a(in.r.cols()), b(in.r.cols());
  for (auto _ : st) {
    k.col_normal(in.r, in.w, in.u, a, b);
    benchmark::DoNotOptimize(a.data());
  }
  label(st);
}

void BM_WeightedSse(benchmark::State& st) {
  Inputs in = make_inputs(std::size_t(st.range(0)));
  const auto& k = kernels::select(backend_of(st));
  for (auto _ : st) benchmark::DoNotOptimize(k.weighted_sse(in.r, in.w, in.u, in.v));
  label(st);
}

void BM_Deflate(benchmark::State& st) {
  Inputs in = make_inputs(std::size_t(st.range(0)));
  const auto& k = kernels::select(backend_of(st));
  for (auto _ : st) {
    k.deflate(in.r, in.u, in.v);
    benchmark::DoNotOptimize(in.r.values().data());
  }
  label(st);
}

// One stage over the full lambda grid, lambdas fitted one after another so
// only the kernel backend differs.
void BM_FitStage(benchmark::State& st) {
  SceneSpec sp;
  sp.rows = sp.cols = std::size_t(st.range(0));
  sp.background = {product_term({1.0}, {0.45, 0.4})};
  sp.noise_sigma = 0.03;
  sp.seed = 1;
  ScatterSpec sc;
  sc.rows = sc.cols = sp.rows;
  sc.min_radius = 3;
  sc.max_radius = 8;
  sp.blobs = scatter_blobs(sc, 2);
  const Scene s = synth_image(sp);
  HuberConfig cfg;
  cfg.backend = backend_of(st);
  cfg.parallel_lambda = false;
  for (auto _ : st) benchmark::DoNotOptimize(select_lambda(s.image.pixels(), cfg).term.objective);
  label(st);
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {256, 1024, 2048})
    for (long omp : {0, 1}) b->Args({n, omp});
  b->ArgNames({"n", "omp"});
}

}  // namespace

BENCHMARK(BM_HuberWeights)->Apply(sizes);
BENCHMARK(BM_RowNormal)->Apply(sizes);
BENCHMARK(BM_ColNormal)->Apply(sizes);
BENCHMARK(BM_WeightedSse)->Apply(sizes);
BENCHMARK(BM_Deflate)->Apply(sizes);
BENCHMARK(BM_FitStage)->Args({256, 0})->Args({256, 1})->Args({512, 0})->Args({512, 1})->ArgNames({"n", "omp"})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
