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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shield/autodiff.hpp"
#include "shield/interval.hpp"
#include "shield/tensor.hpp"

namespace shield {

enum class LayerKind { dense, conv2d, batchnorm, avgpool, maxpool, activation, flatten };

std::string_view to_string(LayerKind kind);

struct LayerDescriptor {
  LayerKind kind = LayerKind::dense;
  /// Output features (dense) or output channels (conv2d).
  std::size_t units = 0;
  /// Square kernel (conv2d) or window (pools).
  std::size_t kernel = 0;
  std::size_t stride = 1;
  Activation activation = Activation::identity;

  static LayerDescriptor dense(std::size_t units);
  static LayerDescriptor conv(std::size_t channels, std::size_t kernel, std::size_t stride = 1);
  static LayerDescriptor batchnorm();
  static LayerDescriptor avgpool(std::size_t window, std::size_t stride);
  static LayerDescriptor maxpool(std::size_t window, std::size_t stride);
  static LayerDescriptor act(Activation kind);
  static LayerDescriptor flatten();

  /// Per-sample output shape for a per-sample input shape. Throws DimensionError.
  Shape output_shape(const Shape& input) const;

  bool operator==(const LayerDescriptor&) const = default;
};

/// Parses the compact layer list used in configs and checkpoints, e.g.
/// "conv:8:3:1,bn,relu,avgpool:2:2,flatten,dense:10".
std::vector<LayerDescriptor> parse_layers(std::string_view text);
std::string format_layers(const std::vector<LayerDescriptor>& layers);

struct ParamEntry {
  std::size_t layer = 0;
  std::string name;  // "weight", "bias", "gamma", "shift"
  std::size_t offset = 0;
  Shape shape;

  bool operator==(const ParamEntry&) const = default;
};

struct ParamLayout {
  std::vector<ParamEntry> entries;
  std::size_t total = 0;

  const ParamEntry& at(std::size_t layer, std::string_view name) const;
  bool operator==(const ParamLayout&) const = default;
};

/// Layer topology of the target network. Per-sample input shape ({features}
/// or {C, H, W}); the last layer must produce `classes` outputs.
struct NetworkSpec {
  Shape input_shape;
  std::vector<LayerDescriptor> layers;
  std::size_t classes = 0;
  double bn_stability = 1e-5;

  /// Output shape of every layer; validates composition and the final width.
  std::vector<Shape> layer_shapes() const;
  void validate() const { (void)layer_shapes(); }
  ParamLayout layout() const;
  std::size_t batchnorm_count() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// A flat parameter vector plus the layout it is interpreted with.
struct ParamSet {
  ParamLayout layout;
  std::vector<double> flat;

  ParamSet() = default;
  ParamSet(ParamLayout l, std::vector<double> values);

  Tensor tensor(std::size_t layer, std::string_view name) const;
  /// Structured view: one tensor per layout entry, in layout order.
  std::vector<Tensor> unpack() const;
  static ParamSet pack(const ParamLayout& layout, const std::vector<Tensor>& tensors);
};

/// Frozen per-batchnorm-layer statistics used at inference. Index = order of
/// batchnorm layers in the spec.
struct NormState {
  std::vector<interval::ChannelStats> layers;

  bool empty() const { return layers.empty(); }
};

/// How batchnorm obtains its statistics.
enum class NormMode {
  batch,   // statistics of the current batch (training)
  frozen,  // statistics from a NormState (inference)
};

// ---- pure evaluation (no tape) --------------------------------------------

/// Batched point forward. `norm` is required when the spec contains batchnorm
/// layers and `mode == frozen`.
Tensor forward_point(const NetworkSpec& spec, const ParamSet& params, const Tensor& x,
                     const NormState* norm = nullptr, NormMode mode = NormMode::frozen);

/// Every layer output of the point pass (index i = output of layer i).
std::vector<Tensor> forward_point_trace(const NetworkSpec& spec, const ParamSet& params, const Tensor& x,
                                        const NormState* norm = nullptr, NormMode mode = NormMode::frozen);

/// Final-layer bounds for the box [x - eps, x + eps].
IntervalTensor forward_interval(const NetworkSpec& spec, const ParamSet& params, const Tensor& x, double eps,
                                const NormState* norm = nullptr, NormMode mode = NormMode::frozen);

/// Every layer's bounds for an arbitrary input box.
std::vector<IntervalTensor> forward_interval_trace(const NetworkSpec& spec, const ParamSet& params,
                                                   const IntervalTensor& input, const NormState* norm = nullptr,
                                                   NormMode mode = NormMode::frozen);

struct WorstCaseLogits {
  std::vector<double> values;
  std::size_t true_class = 0;
};

/// Lower bound for the true class, upper bounds elsewhere. `bounds` is one
/// sample ([C] or [1, C]).
WorstCaseLogits worst_case_logits(const IntervalTensor& bounds, std::size_t y_true);

// ---- differentiable evaluation on a tape -----------------------------------

/// Parameter nodes in layout order.
struct ParamVars {
  const ParamLayout* layout = nullptr;
  std::vector<ad::Var> vars;

  ad::Var at(std::size_t layer, std::string_view name) const;
};

/// Splits a flat [1, P] (or [P]) parameter node by layout.
ParamVars split_params(ad::Var flat, const ParamLayout& layout);
/// Wraps a concrete ParamSet as constants.
ParamVars constant_params(ad::Tape& tape, const ParamSet& params);

struct TapeForward {
  ad::Var lower;
  ad::Var upper;
  /// Statistics used by each batchnorm layer (batch mode only).
  std::vector<interval::ChannelStats> batch_stats;
};

ad::Var forward_point(ad::Tape& tape, const NetworkSpec& spec, const ParamVars& params, ad::Var x,
                      const NormState* norm, NormMode mode,
                      std::vector<interval::ChannelStats>* stats_out = nullptr);

TapeForward forward_interval(ad::Tape& tape, const NetworkSpec& spec, const ParamVars& params, ad::Var lower,
                             ad::Var upper, const NormState* norm, NormMode mode);

/// Prepends the batch dim: per-sample shape -> [B, ...].
Shape batched(const Shape& sample_shape, std::size_t batch);

}  // namespace shield
