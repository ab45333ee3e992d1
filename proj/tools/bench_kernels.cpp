#include <benchmark/benchmark.h>

#include "radon/kernels.hpp"
#include "radon/pointops.hpp"
#include "radon/rng.hpp"
#include "radon/tensor.hpp"

using namespace radon;

namespace {

ad::Tensor random_matrix(int64_t rows, int64_t cols, uint64_t seed) {
  Rng rng(seed);
  ad::Tensor t({rows, cols});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, 1.0);
  return t;
}

void BM_matmul_serial(benchmark::State& state) {
  const int64_t m = state.range(0), k = state.range(1), n = state.range(2);
  const ad::Tensor a = random_matrix(m, k, 1), b = random_matrix(k, n, 2);
  ad::Tensor c({m, n});
  for (auto _ : state) {
    c.fill(0.0);
    kern::matmul_serial(a.data(), b.data(), c.data(), m, k, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * m * k * n);
}

void BM_matmul_parallel(benchmark::State& state) {
  const int64_t m = state.range(0), k = state.range(1), n = state.range(2);
  const ad::Tensor a = random_matrix(m, k, 1), b = random_matrix(k, n, 2);
  ad::Tensor c({m, n});
  for (auto _ : state) {
    c.fill(0.0);
    kern::matmul_parallel(a.data(), b.data(), c.data(), m, k, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * m * k * n);
}

void BM_scan_recursive(benchmark::State& state) {
  const int64_t batch = state.range(0), t_len = 24, ch = 64, s_dim = 64;
  const ad::Tensor x = random_matrix(batch * t_len, ch, 3);
  const ad::Tensor a = random_matrix(1, s_dim, 4), b = random_matrix(1, s_dim, 5),
                   c = random_matrix(1, s_dim, 6);
  ad::Tensor y({batch * t_len, ch});
  for (auto _ : state) {
    kern::scan_recursive_serial(x.data(), a.data(), b.data(), c.data(), y.data(), batch, t_len, ch,
                                s_dim);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_scan_kernel(benchmark::State& state) {
  const int64_t batch = state.range(0), t_len = 24, ch = 64, s_dim = 64;
  const ad::Tensor x = random_matrix(batch * t_len, ch, 3);
  const ad::Tensor a = random_matrix(1, s_dim, 4), b = random_matrix(1, s_dim, 5),
                   c = random_matrix(1, s_dim, 6);
  ad::Tensor y({batch * t_len, ch});
  for (auto _ : state) {
    kern::scan_kernel_parallel(x.data(), a.data(), b.data(), c.data(), y.data(), batch, t_len, ch,
                               s_dim);
    benchmark::DoNotOptimize(y.data());
  }
}

ad::Tensor random_cloud(int64_t n, uint64_t seed) {
  Rng rng(seed);
  ad::Tensor t({n, 3});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-30.0, 30.0);
  return t;
}

void BM_knn_serial(benchmark::State& state) {
  const ad::Tensor cloud = random_cloud(state.range(0), 7);
  for (auto _ : state) {
    auto idx = pointops::knn_serial(cloud, cloud, 8);
    benchmark::DoNotOptimize(idx.data());
  }
}

void BM_knn_parallel(benchmark::State& state) {
  const ad::Tensor cloud = random_cloud(state.range(0), 7);
  for (auto _ : state) {
    auto idx = pointops::knn_parallel(cloud, cloud, 8);
    benchmark::DoNotOptimize(idx.data());
  }
}

void BM_fps_serial(benchmark::State& state) {
  const ad::Tensor cloud = random_cloud(state.range(0), 9);
  for (auto _ : state) {
    auto idx = pointops::fps_serial(cloud, state.range(0) / 4, pointops::FpsSeed::kFirstIndex);
    benchmark::DoNotOptimize(idx.data());
  }
}

void BM_fps_parallel(benchmark::State& state) {
  const ad::Tensor cloud = random_cloud(state.range(0), 9);
  for (auto _ : state) {
    auto idx = pointops::fps_parallel(cloud, state.range(0) / 4, pointops::FpsSeed::kFirstIndex);
    benchmark::DoNotOptimize(idx.data());
  }
}

}  // namespace

BENCHMARK(BM_matmul_serial)->Args({2560, 201, 64})->Args({320, 64, 64});
BENCHMARK(BM_matmul_parallel)->Args({2560, 201, 64})->Args({320, 64, 64});
BENCHMARK(BM_scan_recursive)->Arg(320);
BENCHMARK(BM_scan_kernel)->Arg(320);
BENCHMARK(BM_knn_serial)->Arg(320)->Arg(512);
BENCHMARK(BM_knn_parallel)->Arg(320)->Arg(512);
BENCHMARK(BM_fps_serial)->Arg(512);
BENCHMARK(BM_fps_parallel)->Arg(512);

BENCHMARK_MAIN();
