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

#pragma once

// Dense compute kernels. The functions in `shield::kernels` are OpenMP
// parallel; `shield::kernels::reference` holds straight-line serial versions
// with the same contracts, kept for tests and the benchmark target.
//
// Every parallel kernel partitions its output so that each element is written
// by exactly one thread with a fixed summation order: results do not depend on
// the thread count.

#include <cstddef>
#include <span>

namespace shield::kernels {

enum class Trans { no, yes };

/// C (m x n) = op(A) * op(B), or C += op(A) * op(B) when `accumulate`.
/// op(A) is m x k (A stored k x m when transposed), op(B) is k x n.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate = false);

/// Valid-padding NCHW convolution geometry.
struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;

  std::size_t out_h() const { return (height - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (width - kernel_w) / stride + 1; }
  std::size_t input_size() const { return batch * in_channels * height * width; }
  std::size_t kernel_size() const { return out_channels * in_channels * kernel_h * kernel_w; }
  std::size_t output_size() const { return batch * out_channels * out_h() * out_w(); }
};

/// out = conv(input, kernel), no bias.
void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> out);
/// grad_input += d(out)/d(input)^T grad_out
void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_out,
                           std::span<const double> kernel, std::span<double> grad_input);
/// grad_kernel += d(out)/d(kernel)^T grad_out
void conv2d_backward_kernel(const ConvGeometry& g, std::span<const double> grad_out,
                            std::span<const double> input, std::span<double> grad_kernel);

namespace reference {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate = false);
void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> out);
void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_out,
                           std::span<const double> kernel, std::span<double> grad_input);
void conv2d_backward_kernel(const ConvGeometry& g, std::span<const double> grad_out,
                            std::span<const double> input, std::span<double> grad_kernel);

}  // namespace reference

/// Threads the parallel kernels will use (1 when built without OpenMP).
int max_threads();

}  // namespace shield::kernels
