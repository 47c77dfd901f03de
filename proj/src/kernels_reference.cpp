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

// Serial textbook loops. No blocking, no reordering.

#include "shield/kernels.hpp"

namespace shield::kernels::reference {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::yes ? a[p * m + i] : a[i * k + p];
        const double bv = tb == Trans::yes ? b[j * k + p] : b[p * n + j];
        s += av * bv;
      }
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

namespace {

std::size_t at(const ConvGeometry& g, std::size_t b, std::size_t c, std::size_t y, std::size_t x) {
  return ((b * g.in_channels + c) * g.height + y) * g.width + x;
}

std::size_t kat(const ConvGeometry& g, std::size_t o, std::size_t c, std::size_t ky, std::size_t kx) {
  return ((o * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx;
}

std::size_t oat(const ConvGeometry& g, std::size_t b, std::size_t o, std::size_t y, std::size_t x) {
  return ((b * g.out_channels + o) * g.out_h() + y) * g.out_w() + x;
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> out) {
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t o = 0; o < g.out_channels; ++o)
      for (std::size_t y = 0; y < g.out_h(); ++y)
        for (std::size_t x = 0; x < g.out_w(); ++x) {
          double s = 0.0;
          for (std::size_t c = 0; c < g.in_channels; ++c)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx)
                s += input[at(g, b, c, y * g.stride + ky, x * g.stride + kx)] * kernel[kat(g, o, c, ky, kx)];
          out[oat(g, b, o, y, x)] = s;
        }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_out,
                           std::span<const double> kernel, std::span<double> grad_input) {
  // Gather form: each input pixel sums over the outputs that touch it.
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t c = 0; c < g.in_channels; ++c)
      for (std::size_t iy = 0; iy < g.height; ++iy)
        for (std::size_t ix = 0; ix < g.width; ++ix) {
          double s = 0.0;
          for (std::size_t o = 0; o < g.out_channels; ++o)
            for (std::size_t ky = 0; ky < g.kernel_h && ky <= iy; ++ky)
              for (std::size_t kx = 0; kx < g.kernel_w && kx <= ix; ++kx) {
                const std::size_t ty = iy - ky, tx = ix - kx;
                if (ty % g.stride || tx % g.stride) continue;
                const std::size_t y = ty / g.stride, x = tx / g.stride;
                if (y >= g.out_h() || x >= g.out_w()) continue;
                s += grad_out[oat(g, b, o, y, x)] * kernel[kat(g, o, c, ky, kx)];
              }
          grad_input[at(g, b, c, iy, ix)] += s;
        }
}

void conv2d_backward_kernel(const ConvGeometry& g, std::span<const double> grad_out,
                            std::span<const double> input, std::span<double> grad_kernel) {
  for (std::size_t o = 0; o < g.out_channels; ++o)
    for (std::size_t c = 0; c < g.in_channels; ++c)
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          double s = 0.0;
          for (std::size_t b = 0; b < g.batch; ++b)
            for (std::size_t y = 0; y < g.out_h(); ++y)
              for (std::size_t x = 0; x < g.out_w(); ++x)
                s += grad_out[oat(g, b, o, y, x)] * input[at(g, b, c, y * g.stride + ky, x * g.stride + kx)];
          grad_kernel[kat(g, o, c, ky, kx)] += s;
        }
}

}  // namespace shield::kernels::reference
