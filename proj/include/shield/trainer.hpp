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
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "shield/data.hpp"
#include "shield/losses.hpp"
#include "shield/metrics.hpp"
#include "shield/model.hpp"
#include "shield/optimizer.hpp"

namespace shield {

struct TrainerConfig {
  /// Optimization steps per task.
  std::size_t steps = 1000;
  std::size_t batch = 64;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  /// loss.kappa is used only when kappa_schedule is off; loss.eps is the target radius.
  LossConfig loss;
  bool interval_mixup = true;
  bool kappa_schedule = true;
  bool eps_schedule = true;
  /// Validation period for model selection in the second half of each task; 0 keeps the last step.
  std::size_t val_every = 50;
  /// Weight of the newest batch in the running batchnorm statistics.
  double bn_momentum = 0.1;

  void validate() const;
};

struct StepLog {
  std::size_t task = 0;
  std::size_t step = 0;
  double loss = 0.0;
  double fit_loss = 0.0;
  double reg_loss = 0.0;
  double kappa = 0.0;
  double eps = 0.0;
  double lambda = 1.0;
  double eps_virtual = 0.0;
};

struct TaskLog {
  std::vector<StepLog> steps;
  /// Step whose parameters were kept, with its validation objective (NaN without selection).
  std::size_t selected_step = 0;
  double selected_value = 0.0;
};

/// Fresh model for `tasks` tasks: the generator emits the full target layout.
Model make_model(const NetworkSpec& spec, const HypernetConfig& hnet, std::size_t tasks);

/// Trains task `task` (must be model.tasks_trained + 1). When `pairs` is
/// non-empty every minibatch is built from those index pairs of task.train,
/// each taken in both orientations, instead of random in-batch partners.
TaskLog train_task(Model& model, const Task& task, std::size_t task_id, const TrainerConfig& config,
                   std::span<const std::pair<std::size_t, std::size_t>> pairs = {});

/// Validation objective used for model selection.
double validation_objective(const Model& model, std::size_t task_id, const Dataset& val, const TrainerConfig& config,
                            std::span<const Tensor> targets);

struct SequenceResult {
  ResultMatrix accuracy;
  std::vector<TaskLog> logs;
};

using TaskCallback = std::function<void(const Model&, std::size_t task, const ResultMatrix&)>;

/// Trains every task in order and fills the accuracy table after each one.
SequenceResult train_sequence(Model& model, const TaskSequence& tasks, const TrainerConfig& config,
                              const TaskCallback& on_task_end = {});

}  // namespace shield
