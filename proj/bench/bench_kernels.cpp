/*
 * Copyright 2026 The SHIELD-CL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Parallel kernels against their serial reference versions.

#include <benchmark/benchmark.h>

#include <vector>

#include "shield/kernels.hpp"
#include "shield/random.hpp"

namespace {

using namespace shield;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, -1.0, 1.0);
  return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::gemm(kernels::Trans::no, kernels::Trans::yes, n, n, n, a, b, c);
    } else {
      kernels::reference::gemm(kernels::Trans::no, kernels::Trans::yes, n, n, n, a, b, c);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <bool Parallel>
void BM_Conv(benchmark::State& state) {
  kernels::ConvGeometry g;
  g.batch = static_cast<std::size_t>(state.range(0));
  g.in_channels = 4;
  g.height = g.width = 16;
  g.out_channels = 8;
  g.kernel_h = g.kernel_w = 3;
  const auto x = random_vector(g.input_size(), 3), k = random_vector(g.kernel_size(), 4);
  std::vector<double> out(g.output_size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::conv2d_forward(g, x, k, out);
    } else {
      kernels::reference::conv2d_forward(g, x, k, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

BENCHMARK(BM_Gemm<true>)->Name("gemm/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<false>)->Name("gemm/reference")->Arg(64)->Arg(256);
BENCHMARK(BM_Conv<true>)->Name("conv2d/parallel")->Arg(8)->Arg(64);
BENCHMARK(BM_Conv<false>)->Name("conv2d/reference")->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
