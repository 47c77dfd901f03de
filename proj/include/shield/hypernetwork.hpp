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

#include <cstdint>
#include <span>
#include <vector>

#include "shield/autodiff.hpp"
#include "shield/network.hpp"

namespace shield {

struct HypernetConfig {
  std::size_t embedding_dim = 24;
  std::vector<std::size_t> hidden{100, 100};
  /// Multiplier on the generator's output-layer init so first target weights are small.
  double output_scale = 0.01;
  double embedding_std = 1.0;
  std::uint64_t seed = 1;
};

/// MLP generator H(e; phi): task embedding -> flat target-network parameters.
///
/// Generator weights are stored as [W_0, b_0, ..., W_L, b_L] with W_l of shape
/// [out, in]; hidden layers use ReLU and the output layer is linear.
/// Embeddings are [1, N] and indexed from 1.
class Hypernetwork {
 public:
  Hypernetwork() = default;
  Hypernetwork(const HypernetConfig& config, std::size_t tasks, std::size_t output_dim);

  std::size_t task_count() const { return embeddings_.size(); }
  std::size_t embedding_dim() const { return embedding_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }

  const std::vector<Tensor>& weights() const { return weights_; }
  std::vector<Tensor>& weights() { return weights_; }

  const Tensor& embedding(std::size_t task) const;
  /// Throws ContractError for frozen tasks.
  Tensor& mutable_embedding(std::size_t task);

  bool frozen(std::size_t task) const;
  void freeze(std::size_t task);

  /// theta_t as a flat vector.
  std::vector<double> generate_flat(std::size_t task) const;
  /// theta_t interpreted with `layout`; its total must equal output_dim().
  ParamSet generate(std::size_t task, const ParamLayout& layout) const;

  /// Differentiable H(e; phi) on a tape, [1, output_dim].
  ad::Var generate(ad::Tape& tape, ad::Var embedding, std::span<const ad::Var> weights) const;

  /// Rebuilds a network from stored parts (checkpoint loading).
  static Hypernetwork from_parts(std::size_t embedding_dim, std::vector<std::size_t> hidden, std::size_t output_dim,
                                 std::vector<Tensor> weights, std::vector<Tensor> embeddings,
                                 std::vector<bool> frozen);

 private:
  void check_task(std::size_t task) const;

  std::size_t embedding_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::vector<std::size_t> hidden_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> embeddings_;
  std::vector<bool> frozen_;
};

}  // namespace shield
