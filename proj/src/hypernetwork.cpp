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

#include "shield/hypernetwork.hpp"

#include <cmath>

#include "shield/errors.hpp"
#include "shield/random.hpp"

namespace shield {

Hypernetwork::Hypernetwork(const HypernetConfig& config, std::size_t tasks, std::size_t output_dim)
    : embedding_dim_(config.embedding_dim), output_dim_(output_dim), hidden_(config.hidden) {
  if (tasks == 0) throw ContractError("hypernetwork needs at least one task");
  if (config.embedding_dim == 0 || output_dim == 0) throw ContractError("hypernetwork dimensions must be positive");
  Rng rng(config.seed);
  std::vector<std::size_t> widths{embedding_dim_};
  widths.insert(widths.end(), hidden_.begin(), hidden_.end());
  widths.push_back(output_dim_);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
    const bool output_layer = l + 2 == widths.size();
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in)) * (output_layer ? config.output_scale : 1.0);
    Tensor w(Shape{fan_out, fan_in});
    Tensor b(Shape{fan_out});
    for (double& v : w.data) v = uniform(rng, -bound, bound);
    for (double& v : b.data) v = uniform(rng, -bound, bound);
    weights_.push_back(std::move(w));
    weights_.push_back(std::move(b));
  }
  for (std::size_t t = 0; t < tasks; ++t) {
    Tensor e(Shape{1, embedding_dim_});
    for (double& v : e.data) v = config.embedding_std * normal(rng);
    embeddings_.push_back(std::move(e));
  }
  frozen_.assign(tasks, false);
}

Hypernetwork Hypernetwork::from_parts(std::size_t embedding_dim, std::vector<std::size_t> hidden,
                                      std::size_t output_dim, std::vector<Tensor> weights,
                                      std::vector<Tensor> embeddings, std::vector<bool> frozen) {
  Hypernetwork h;
  h.embedding_dim_ = embedding_dim;
  h.output_dim_ = output_dim;
  h.hidden_ = std::move(hidden);
  if (weights.size() != 2 * (h.hidden_.size() + 1)) throw DimensionError("hypernetwork weight count mismatch");
  std::size_t in = embedding_dim;
  for (std::size_t l = 0; l <= h.hidden_.size(); ++l) {
    const std::size_t out = l < h.hidden_.size() ? h.hidden_[l] : output_dim;
    if (weights[2 * l].shape != Shape{out, in} || weights[2 * l + 1].shape != Shape{out}) {
      throw DimensionError("hypernetwork layer " + std::to_string(l) + " has the wrong shape");
    }
    in = out;
  }
  for (const auto& e : embeddings) {
    if (e.shape != Shape{1, embedding_dim}) throw DimensionError("embedding shape mismatch");
  }
  if (frozen.size() != embeddings.size()) throw DimensionError("frozen flags do not match embeddings");
  h.weights_ = std::move(weights);
  h.embeddings_ = std::move(embeddings);
  h.frozen_ = std::move(frozen);
  return h;
}

void Hypernetwork::check_task(std::size_t task) const {
  if (task == 0 || task > embeddings_.size()) {
    throw ContractError("unknown task id " + std::to_string(task) + " (have " + std::to_string(embeddings_.size()) +
                        ")");
  }
}

const Tensor& Hypernetwork::embedding(std::size_t task) const {
  check_task(task);
  return embeddings_[task - 1];
}

Tensor& Hypernetwork::mutable_embedding(std::size_t task) {
  check_task(task);
  if (frozen_[task - 1]) throw ContractError("embedding of task " + std::to_string(task) + " is frozen");
  return embeddings_[task - 1];
}

bool Hypernetwork::frozen(std::size_t task) const {
  check_task(task);
  return frozen_[task - 1];
}

void Hypernetwork::freeze(std::size_t task) {
  check_task(task);
  frozen_[task - 1] = true;
}

ad::Var Hypernetwork::generate(ad::Tape& tape, ad::Var embedding, std::span<const ad::Var> weights) const {
  (void)tape;
  if (weights.size() != weights_.size()) throw DimensionError("hypernetwork weight count mismatch");
  ad::Var h = embedding;
  const std::size_t layers = weights.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    h = ad::add_channel(ad::matmul_nt(h, weights[2 * l]), weights[2 * l + 1]);
    if (l + 1 < layers) h = ad::relu(h);
  }
  return h;
}

std::vector<double> Hypernetwork::generate_flat(std::size_t task) const {
  check_task(task);
  ad::Tape tape;
  std::vector<ad::Var> w;
  w.reserve(weights_.size());
  for (const auto& t : weights_) w.push_back(tape.constant(t));
  return generate(tape, tape.constant(embeddings_[task - 1]), w).value().data;
}

ParamSet Hypernetwork::generate(std::size_t task, const ParamLayout& layout) const {
  if (layout.total != output_dim_) {
    throw DimensionError("hypernetwork emits " + std::to_string(output_dim_) + " values, layout needs " +
                         std::to_string(layout.total));
  }
  return ParamSet(layout, generate_flat(task));
}

}  // namespace shield
