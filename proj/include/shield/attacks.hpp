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
#include <string_view>
#include <vector>

#include "shield/data.hpp"
#include "shield/network.hpp"

namespace shield {

/// A concrete target network ready for inference (frozen batchnorm).
struct Classifier {
  const NetworkSpec& spec;
  const ParamSet& params;
  const NormState* norm = nullptr;
};

enum class AttackKind { none, fgsm, pgd };

AttackKind parse_attack(std::string_view text);
std::string_view to_string(AttackKind kind);

struct AttackConfig {
  AttackKind kind = AttackKind::none;
  double eps = 0.0;
  /// PGD step; 0 selects eps / 4.
  double step = 0.0;
  std::size_t iterations = 100;
  bool random_start = true;
  std::uint64_t seed = 1;

  double step_size() const { return step > 0.0 ? step : eps / 4.0; }
  void validate() const;
};

/// Gradient of the summed cross-entropy of the point pass with respect to x.
Tensor input_gradient(const Classifier& model, const Tensor& x, std::span<const std::size_t> labels);

/// clip(x + step * sign(grad), 0, 1), with sign(0) = 0.
Tensor signed_step(const Tensor& x, const Tensor& grad, double step);
/// Projects `candidate` onto the max-norm ball of radius eps around `origin`, intersected with [0, 1].
Tensor project(const Tensor& candidate, const Tensor& origin, double eps);

Tensor fgsm(const Classifier& model, const Tensor& x, std::span<const std::size_t> labels, double eps);
Tensor pgd(const Classifier& model, const Tensor& x, std::span<const std::size_t> labels, const AttackConfig& config);
/// Dispatches on config.kind; `none` returns x.
Tensor attack(const Classifier& model, const Tensor& x, std::span<const std::size_t> labels,
              const AttackConfig& config);

std::vector<std::size_t> predict(const Classifier& model, const Tensor& x);

/// Strict dominance of the label's lower bound over every other upper bound
/// (one sample, [C] or [1, C]).
bool certified(const IntervalTensor& bounds, std::size_t label);
std::vector<bool> certify(const Classifier& model, const Tensor& x, std::span<const std::size_t> labels, double eps);

struct SampleReport {
  std::vector<std::size_t> clean;
  std::vector<std::size_t> attacked;
  std::vector<bool> certified;
};

/// Per-sample clean prediction, prediction on the attacked input and
/// certification at eps_cert. Samples are processed in parallel chunks whose
/// random streams depend only on the chunk index.
SampleReport evaluate_samples(const Classifier& model, const Dataset& data, const AttackConfig& attack_config,
                              double eps_cert);

struct EvalSummary {
  std::size_t count = 0;
  double accuracy = 0.0;
  double attacked_accuracy = 0.0;
  /// Correct and certified.
  double verified_accuracy = 0.0;
};

EvalSummary summarize(const SampleReport& report, std::span<const std::size_t> labels);

double accuracy(const Classifier& model, const Dataset& data);
double verified_accuracy(const Classifier& model, const Dataset& data, double eps);

}  // namespace shield
