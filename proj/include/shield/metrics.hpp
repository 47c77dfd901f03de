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
#include <vector>

#include "shield/attacks.hpp"
#include "shield/data.hpp"
#include "shield/model.hpp"

namespace shield {

/// Lower-triangular accuracy table: at(t, s) is the accuracy on task s after
/// training through task t (both 1-based, s <= t).
class ResultMatrix {
 public:
  ResultMatrix() = default;
  explicit ResultMatrix(std::size_t tasks);

  std::size_t size() const { return tasks_; }
  void set(std::size_t t, std::size_t s, double value);
  double at(std::size_t t, std::size_t s) const;
  bool has(std::size_t t, std::size_t s) const;
  /// Rows 1..t all filled.
  bool complete_through(std::size_t t) const;

 private:
  std::size_t index(std::size_t t, std::size_t s) const;

  std::size_t tasks_ = 0;
  std::vector<double> values_;
};

/// Mean of the final row.
double average_accuracy(const ResultMatrix& r);
/// Mean over t < T of at(T, t) - at(t, t). Needs T >= 2.
double backward_transfer(const ResultMatrix& r);

/// Shannon entropy in nats, with 0 log 0 = 0.
double entropy(std::span<const double> probabilities);
/// 1-based index of the smallest entropy; ties go to the lowest index.
std::size_t argmin_entropy(std::span<const double> entropies);

struct CilPrediction {
  std::size_t task = 0;  // 1-based
  std::size_t label = 0;
};

struct CilResult {
  std::vector<CilPrediction> predictions;
  /// [N, T] predictive entropy of every task head.
  Tensor entropies;
};

/// Runs every task head on x and picks the least uncertain one.
CilResult cil_infer(const Model& model, const Tensor& x);

struct CilAccuracy {
  double task_accuracy = 0.0;
  /// Task and class both right.
  double accuracy = 0.0;
};

/// Class-incremental accuracy on the concatenated test sets. With an attack,
/// each sample is perturbed against its own task head first and inference
/// runs on the perturbed input.
CilAccuracy cil_evaluate(const Model& model, const TaskSequence& tasks, const AttackConfig& attack_config = {});

}  // namespace shield
