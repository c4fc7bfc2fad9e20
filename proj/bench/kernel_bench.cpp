// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// OpenMP kernels against the serial reference loops, at the shapes the
// default engines run. Each benchmark is registered twice: Parallel/ and Serial/.

#include <benchmark/benchmark.h>

#include <vector>

#include "clearstream/kernels.hpp"
#include "clearstream/rng.hpp"
#include "reference/reference.hpp"

namespace {

using namespace clearstream;

std::vector<float> filled(std::size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

// TCN pointwise step over one packet of new frames: rows = 7, N = 512.
template <bool kParallel>
void BM_PointwiseRows(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0)), n = 512;
  const auto a = filled(static_cast<std::size_t>(rows) * n, 1), w = filled(n * n, 2), b = filled(n, 3);
  std::vector<float> out(static_cast<std::size_t>(rows) * n);
  for (auto _ : state) {
    if constexpr (kParallel)
      kernels::gemm_rows_by_weights(a.data(), rows, n, w.data(), n, b.data(), out.data());
    else
      reference::gemm_rows_by_weights(a.data(), rows, n, w.data(), n, b.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * rows * n * n);
}

// UNet pointwise layer: channels x (mel x time) columns.
template <bool kParallel>
void BM_PointwiseCols(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), cols = static_cast<int>(state.range(1));
  const auto w = filled(static_cast<std::size_t>(c) * c, 4), x = filled(static_cast<std::size_t>(c) * cols, 5),
             b = filled(c, 6);
  std::vector<float> out(static_cast<std::size_t>(c) * cols);
  for (auto _ : state) {
    if constexpr (kParallel)
      kernels::gemm_weights_by_cols(w.data(), c, c, x.data(), cols, b.data(), out.data());
    else
      reference::gemm_weights_by_cols(w.data(), c, c, x.data(), cols, b.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * c * c * cols);
}

template <bool kParallel>
void BM_DepthwiseDilated(benchmark::State& state) {
  const int frames = static_cast<int>(state.range(0)), n = 512, dil = 64, taps = 3;
  const auto in = filled(static_cast<std::size_t>(frames + (taps - 1) * dil) * n, 7), w = filled(n * taps, 8);
  std::vector<float> out(static_cast<std::size_t>(frames) * n);
  for (auto _ : state) {
    if constexpr (kParallel)
      kernels::depthwise_dilated(in.data(), n, frames, dil, w.data(), taps, out.data());
    else
      reference::depthwise_dilated(in.data(), n, frames, dil, w.data(), taps, out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool kParallel>
void BM_Depthwise3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), h = static_cast<int>(state.range(1)), wd = h / 2;
  const auto in = filled(static_cast<std::size_t>(c) * h * wd, 9), w = filled(c * 9, 10);
  std::vector<float> out(in.size());
  for (auto _ : state) {
    if constexpr (kParallel)
      kernels::depthwise3x3(in.data(), c, h, wd, w.data(), out.data());
    else
      reference::depthwise3x3(in.data(), c, h, wd, w.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool kParallel>
void BM_MaxPool(benchmark::State& state) {
  const int c = 64, h = 128, wd = 64;
  const auto in = filled(static_cast<std::size_t>(c) * h * wd, 11);
  std::vector<float> out(in.size() / 4);
  for (auto _ : state) {
    if constexpr (kParallel)
      kernels::maxpool2x2(in.data(), c, h, wd, out.data());
    else
      reference::maxpool2x2(in.data(), c, h, wd, out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool kParallel>
void BM_Transposed(benchmark::State& state) {
  const int cin = static_cast<int>(state.range(0)), cout = cin / 2, h = static_cast<int>(state.range(1)), wd = h / 2;
  const auto in = filled(static_cast<std::size_t>(cin) * h * wd, 12),
             packed = filled(static_cast<std::size_t>(4) * cout * cin, 13), b = filled(cout, 14);
  std::vector<float> out(static_cast<std::size_t>(cout) * 4 * h * wd);
  for (auto _ : state) {
    if constexpr (kParallel)
      kernels::transposed2x2(in.data(), cin, h, wd, packed.data(), b.data(), cout, out.data());
    else
      reference::transposed2x2(in.data(), cin, h, wd, packed.data(), b.data(), cout, out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_PointwiseRows<true>)->Name("Parallel/PointwiseRows")->Arg(7)->Arg(21);
BENCHMARK(BM_PointwiseRows<false>)->Name("Serial/PointwiseRows")->Arg(7)->Arg(21);
BENCHMARK(BM_PointwiseCols<true>)->Name("Parallel/PointwiseCols")->Args({64, 8192})->Args({512, 64});
BENCHMARK(BM_PointwiseCols<false>)->Name("Serial/PointwiseCols")->Args({64, 8192})->Args({512, 64});
BENCHMARK(BM_DepthwiseDilated<true>)->Name("Parallel/DepthwiseDilated")->Arg(7)->Arg(64);
BENCHMARK(BM_DepthwiseDilated<false>)->Name("Serial/DepthwiseDilated")->Arg(7)->Arg(64);
BENCHMARK(BM_Depthwise3x3<true>)->Name("Parallel/Depthwise3x3")->Args({64, 128})->Args({512, 16});
BENCHMARK(BM_Depthwise3x3<false>)->Name("Serial/Depthwise3x3")->Args({64, 128})->Args({512, 16});
BENCHMARK(BM_MaxPool<true>)->Name("Parallel/MaxPool");
BENCHMARK(BM_MaxPool<false>)->Name("Serial/MaxPool");
BENCHMARK(BM_Transposed<true>)->Name("Parallel/Transposed2x2")->Args({128, 64})->Args({512, 8});
BENCHMARK(BM_Transposed<false>)->Name("Serial/Transposed2x2")->Args({128, 64})->Args({512, 8});

BENCHMARK_MAIN();
