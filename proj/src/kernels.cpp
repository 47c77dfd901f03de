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

#include "shield/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace shield::kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1u << 14;

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
  const bool parallel = m * n * k >= kParallelWork && m > 1;
  const bool a_t = ta == Trans::yes;
  const bool b_t = tb == Trans::yes;

#pragma omp parallel if (parallel)
  {
    std::vector<double> acc(n);
#pragma omp for schedule(static)
    for (std::int64_t ii = 0; ii < rows; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      std::fill(acc.begin(), acc.end(), 0.0);
      if (b_t) {
        // B row j is contiguous: dot products.
        for (std::size_t j = 0; j < n; ++j) {
          const double* brow = b.data() + j * k;
          double s = 0.0;
          for (std::size_t p = 0; p < k; ++p) {
            const double av = a_t ? a[p * m + i] : a[i * k + p];
            s += av * brow[p];
          }
          acc[j] = s;
        }
      } else {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = a_t ? a[p * m + i] : a[i * k + p];
          const double* brow = b.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) acc[j] += av * brow[j];
        }
      }
      double* crow = c.data() + i * n;
      if (accumulate) {
        for (std::size_t j = 0; j < n; ++j) crow[j] += acc[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] = acc[j];
      }
    }
  }
}

void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> out) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto planes = static_cast<std::int64_t>(g.batch * g.out_channels);
  const bool parallel = g.output_size() * g.in_channels * g.kernel_h * g.kernel_w >= kParallelWork;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t plane = 0; plane < planes; ++plane) {
    const std::size_t bi = static_cast<std::size_t>(plane) / g.out_channels;
    const std::size_t o = static_cast<std::size_t>(plane) % g.out_channels;
    double* dst = out.data() + static_cast<std::size_t>(plane) * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double s = 0.0;
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          const double* src = input.data() + ((bi * g.in_channels + c) * g.height) * g.width;
          const double* ker = kernel.data() + ((o * g.in_channels + c) * g.kernel_h) * g.kernel_w;
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            const double* srow = src + (y * g.stride + ky) * g.width + x * g.stride;
            const double* krow = ker + ky * g.kernel_w;
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) s += srow[kx] * krow[kx];
          }
        }
        dst[y * ow + x] = s;
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_out,
                           std::span<const double> kernel, std::span<double> grad_input) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto batch = static_cast<std::int64_t>(g.batch);
  const bool parallel = g.output_size() * g.in_channels * g.kernel_h * g.kernel_w >= kParallelWork;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t bb = 0; bb < batch; ++bb) {
    const auto bi = static_cast<std::size_t>(bb);
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      const double* go = grad_out.data() + (bi * g.out_channels + o) * oh * ow;
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          const double gv = go[y * ow + x];
          for (std::size_t c = 0; c < g.in_channels; ++c) {
            double* gi = grad_input.data() + ((bi * g.in_channels + c) * g.height) * g.width;
            const double* ker = kernel.data() + ((o * g.in_channels + c) * g.kernel_h) * g.kernel_w;
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              double* grow = gi + (y * g.stride + ky) * g.width + x * g.stride;
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) grow[kx] += gv * ker[ky * g.kernel_w + kx];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_kernel(const ConvGeometry& g, std::span<const double> grad_out,
                            std::span<const double> input, std::span<double> grad_kernel) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto channels = static_cast<std::int64_t>(g.out_channels);
  const bool parallel = g.output_size() * g.in_channels * g.kernel_h * g.kernel_w >= kParallelWork;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t oo = 0; oo < channels; ++oo) {
    const auto o = static_cast<std::size_t>(oo);
    for (std::size_t bi = 0; bi < g.batch; ++bi) {
      const double* go = grad_out.data() + (bi * g.out_channels + o) * oh * ow;
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        const double* src = input.data() + ((bi * g.in_channels + c) * g.height) * g.width;
        double* gk = grad_kernel.data() + ((o * g.in_channels + c) * g.kernel_h) * g.kernel_w;
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            double s = 0.0;
            for (std::size_t y = 0; y < oh; ++y) {
              const double* srow = src + (y * g.stride + ky) * g.width + kx;
              for (std::size_t x = 0; x < ow; ++x) s += go[y * ow + x] * srow[x * g.stride];
            }
            gk[ky * g.kernel_w + kx] += s;
          }
        }
      }
    }
  }
}

}  // namespace shield::kernels
