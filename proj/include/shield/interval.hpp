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

// Interval bound propagation over batched tensors.
//
// Boxes are stored as (lower, upper); affine-like layers go through the
// midpoint/radius form  mu' = W mu + b,  r' = |W| r.  Monotone activations map
// the two bounds independently.  Everything is plain 64-bit arithmetic with no
// directed rounding.

#include <string>
#include <string_view>

#include "shield/tensor.hpp"

namespace shield {

/// Monotone non-decreasing activations only.
enum class Activation { relu, sigmoid, identity };

double activate(Activation kind, double v);
Activation parse_activation(std::string_view name);
std::string_view to_string(Activation kind);

struct IntervalTensor {
  Tensor lower;
  Tensor upper;

  IntervalTensor() = default;
  /// Throws DimensionError on shape mismatch and ContractError if lower > upper anywhere.
  IntervalTensor(Tensor lo, Tensor hi);

  /// Degenerate box lower == upper == x.
  static IntervalTensor point(const Tensor& x);
  /// [x - eps, x + eps] elementwise; eps must be >= 0.
  static IntervalTensor ball(const Tensor& x, double eps);

  const Shape& shape() const { return lower.shape; }
  Tensor midpoint() const;
  Tensor radius() const;
  bool contains(const Tensor& x, double tolerance = 0.0) const;
};

namespace interval {

/// in: [B, in_features], weights: [out, in], bias: [out].
IntervalTensor affine(const IntervalTensor& in, const Tensor& weights, const Tensor& bias);

/// in: [B, C, H, W], kernel: [O, C, kh, kw], bias: [O]. Valid padding.
IntervalTensor conv2d(const IntervalTensor& in, const Tensor& kernel, const Tensor& bias,
                      std::size_t stride);

IntervalTensor activation(const IntervalTensor& in, Activation kind);

/// Per-channel statistics. Channel is dim 1; stats pool the batch and spatial dims.
struct ChannelStats {
  Tensor mean;
  Tensor var;
};

/// Population mean/variance per channel over the concatenation of lower and upper.
ChannelStats concat_statistics(const IntervalTensor& in);

/// Interval batch normalisation with statistics taken from this batch.
/// Negative gamma swaps the roles of the two bounds.
IntervalTensor batchnorm(const IntervalTensor& in, const Tensor& gamma, const Tensor& shift,
                         double stability, ChannelStats* stats_out = nullptr);

/// Same transform with externally supplied (frozen) statistics.
IntervalTensor batchnorm_frozen(const IntervalTensor& in, const Tensor& gamma, const Tensor& shift,
                                const ChannelStats& stats, double stability);

enum class PoolKind { avg, max };

/// in: [B, C, H, W]; square window, no padding.
IntervalTensor pool(const IntervalTensor& in, PoolKind kind, std::size_t window, std::size_t stride);

}  // namespace interval

/// Point (single-valued) counterparts used by the plain forward pass.
namespace point {

Tensor affine(const Tensor& in, const Tensor& weights, const Tensor& bias);
Tensor conv2d(const Tensor& in, const Tensor& kernel, const Tensor& bias, std::size_t stride);
Tensor activation(const Tensor& in, Activation kind);
interval::ChannelStats statistics(const Tensor& in);
Tensor batchnorm(const Tensor& in, const Tensor& gamma, const Tensor& shift,
                 const interval::ChannelStats& stats, double stability);
Tensor pool(const Tensor& in, interval::PoolKind kind, std::size_t window, std::size_t stride);

}  // namespace point

}  // namespace shield
