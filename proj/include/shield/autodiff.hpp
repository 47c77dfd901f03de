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

// Tape-based reverse-mode differentiation.
//
// A Tape owns a list of nodes appended in evaluation order, so node ids are a
// topological order by construction. `backward` walks the ids downwards from
// the output once. Nodes that do not depend on any variable are never
// visited. A tape has a single owner; independent tapes may run on separate
// threads.
//
// Subgradient conventions: d|x|/dx at 0 is 0, relu'(0) is 0, and ties in
// max/min/max-pool route the whole gradient to the first operand.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "shield/interval.hpp"
#include "shield/tensor.hpp"

namespace shield::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
  /// Value of a one-element node.
  double item() const;

  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

struct BackwardArgs {
  const Tensor& grad;
  const Tensor& output;
  std::span<const Tensor* const> inputs;
  /// Null for inputs that do not need a gradient.
  std::span<Tensor* const> input_grads;
};

using BackwardFn = std::function<void(const BackwardArgs&)>;

/// Result of a backward pass: one gradient per node that was reached.
class Gradients {
 public:
  /// Gradient with respect to `v`; zeros of v's shape when v was not reached.
  Tensor wrt(Var v) const;
  bool reached(Var v) const;
  /// Number of nodes whose backward function ran.
  std::size_t visited() const { return visited_; }

 private:
  friend class Tape;
  std::vector<Tensor> grads_;
  std::vector<Shape> shapes_;
  std::size_t visited_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A leaf that never receives a gradient.
  Var constant(Tensor value);
  /// A leaf tracked by `backward`.
  Var variable(Tensor value);

  /// Appends an interior node. `fn` may be empty for non-differentiable ops.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn fn);

  /// Reverse pass from a one-element output. Throws ContractError otherwise.
  Gradients backward(Var output) const;

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::string_view op(std::size_t id) const { return nodes_[id].op; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

 private:
  struct Node {
    std::string_view op;
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// Elementwise, shapes must match exactly.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var maximum(Var a, Var b);
Var minimum(Var a, Var b);

Var neg(Var a);
Var abs(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var activation(Var a, Activation kind);
Var scale(Var a, double factor);
Var add_scalar(Var a, double c);

/// Sum / mean of all elements, shape [1].
Var sum(Var a);
Var mean(Var a);

/// [m,k] x [k,n]
Var matmul(Var a, Var b);
/// [m,k] x [n,k]^T
Var matmul_nt(Var a, Var b);

// Per-channel broadcast of a [C] vector against [B, C, ...].
Var add_channel(Var a, Var v);
Var sub_channel(Var a, Var v);
Var mul_channel(Var a, Var v);
Var div_channel(Var a, Var v);
/// Population mean / variance per channel over batch and spatial dims, shape [C].
Var channel_mean(Var a);
Var channel_variance(Var a);

/// x [B,C,H,W], kernel [O,C,kh,kw]; valid padding, no bias.
Var conv2d(Var x, Var kernel, std::size_t stride);
Var avg_pool(Var x, std::size_t window, std::size_t stride);
Var max_pool(Var x, std::size_t window, std::size_t stride);

Var reshape(Var a, Shape shape);
/// Contiguous range [offset, offset + numel(shape)) of the flattened value.
Var slice(Var a, std::size_t offset, Shape shape);
/// Stacks two batched tensors along dim 0.
Var concat_rows(Var a, Var b);
Var slice_rows(Var a, std::size_t begin, std::size_t end);

/// Row-wise softmax of [B, C].
Var softmax(Var logits);
/// Mean over rows of -log softmax(logits)[label], fused log-sum-exp form.
Var cross_entropy(Var logits, std::span<const std::size_t> labels);

/// Builds a scalar from a tracked copy of the parameters on a fresh tape.
using ScalarFn = std::function<Var(Tape&, Var params)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Central differences against `backward` for each coordinate of `params`, or
/// a seeded random subset of `max_coords` coordinates when that is smaller.
/// Error per coordinate is |a - n| / max(|a|, |n|, 1e-3).
GradCheckReport grad_check(const ScalarFn& f, const Tensor& params, double step, std::uint64_t seed,
                           std::size_t max_coords = 0);

}  // namespace shield::ad
