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

#include <span>
#include <string_view>
#include <vector>

#include "shield/autodiff.hpp"
#include "shield/hypernetwork.hpp"

namespace shield {

/// Shape of the radius law s -> f(s) on s = |2 lambda - 1|; every kind has
/// f(0) = 0, f(1) = 1 and is monotone.
enum class DecayKind { linear, quadratic, log, cos };

DecayKind parse_decay(std::string_view text);
std::string_view to_string(DecayKind kind);

struct LossConfig {
  double kappa = 1.0;
  /// Weight of the output-consistency term on earlier tasks.
  double beta = 0.01;
  double eps = 0.0;
  /// Beta(alpha, alpha) concentration for the mixing weight.
  double alpha = 1.0;
  DecayKind decay = DecayKind::linear;

  void validate() const;
};

/// Radius for a virtual sample mixed with weight `lambda`.
double scaled_radius(double lambda, double eps, DecayKind kind);

/// lambda * a + (1 - lambda) * b.
Tensor mixup_sample(const Tensor& a, const Tensor& b, double lambda);

namespace loss {

/// Rows of [B, C] bounds combined into the pessimistic logit vector: lower
/// bound at the label, upper bound elsewhere.
ad::Var worst_case_logits(ad::Var lower, ad::Var upper, std::span<const std::size_t> labels);

/// kappa * CE(point) + (1 - kappa) * CE(worst case).
ad::Var ibp(ad::Var point_logits, ad::Var lower, ad::Var upper, std::span<const std::size_t> labels, double kappa);

/// lambda * CE(logits, a) + (1 - lambda) * CE(logits, b).
ad::Var mixup(ad::Var logits, std::span<const std::size_t> labels_a, std::span<const std::size_t> labels_b,
              double lambda);

ad::Var interval_mixup(ad::Var point_logits, ad::Var lower, ad::Var upper, std::span<const std::size_t> labels_a,
                       std::span<const std::size_t> labels_b, double lambda, double kappa);

/// Mean over earlier tasks of ||H(e_j; weights) - target_j||^2, where
/// target_j = H(e_j; snapshot) is a constant and e_j are the stored (frozen)
/// embeddings for tasks 1..targets.size().
ad::Var regularization(ad::Tape& tape, const Hypernetwork& hnet, std::span<const ad::Var> weights,
                       std::span<const Tensor> targets);

}  // namespace loss

/// H(e_j; current weights) for j = 1..count, used as regularization targets.
std::vector<Tensor> snapshot_outputs(const Hypernetwork& hnet, std::size_t count);

}  // namespace shield
