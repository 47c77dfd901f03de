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

#include "shield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "shield/errors.hpp"
#include "shield/random.hpp"

namespace shield {

ResultMatrix::ResultMatrix(std::size_t tasks)
    : tasks_(tasks), values_(tasks * tasks, std::numeric_limits<double>::quiet_NaN()) {}

std::size_t ResultMatrix::index(std::size_t t, std::size_t s) const {
  if (t < 1 || t > tasks_ || s < 1 || s > t) {
    throw ContractError("result entry (" + std::to_string(t) + ", " + std::to_string(s) + ") outside the table");
  }
  return (t - 1) * tasks_ + (s - 1);
}

void ResultMatrix::set(std::size_t t, std::size_t s, double value) {
  if (!(value >= 0.0 && value <= 1.0)) throw ContractError("accuracies must lie in [0, 1]");
  values_[index(t, s)] = value;
}

double ResultMatrix::at(std::size_t t, std::size_t s) const {
  const double v = values_[index(t, s)];
  if (std::isnan(v)) throw ContractError("result entry (" + std::to_string(t) + ", " + std::to_string(s) + ") missing");
  return v;
}

bool ResultMatrix::has(std::size_t t, std::size_t s) const { return !std::isnan(values_[index(t, s)]); }

bool ResultMatrix::complete_through(std::size_t t) const {
  for (std::size_t i = 1; i <= t; ++i) {
    for (std::size_t s = 1; s <= i; ++s) {
      if (!has(i, s)) return false;
    }
  }
  return true;
}

double average_accuracy(const ResultMatrix& r) {
  const std::size_t t = r.size();
  if (t == 0) throw ContractError("average accuracy of an empty table");
  double sum = 0.0;
  for (std::size_t s = 1; s <= t; ++s) sum += r.at(t, s);
  return sum / static_cast<double>(t);
}

double backward_transfer(const ResultMatrix& r) {
  const std::size_t t = r.size();
  if (t < 2) throw ContractError("backward transfer needs at least two tasks");
  double sum = 0.0;
  for (std::size_t s = 1; s < t; ++s) sum += r.at(t, s) - r.at(s, s);
  return sum / static_cast<double>(t - 1);
}

double entropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::size_t argmin_entropy(std::span<const double> entropies) {
  if (entropies.empty()) throw ContractError("argmin over no tasks");
  std::size_t best = 0;
  for (std::size_t t = 1; t < entropies.size(); ++t) {
    if (entropies[t] < entropies[best]) best = t;
  }
  return best + 1;
}

CilResult cil_infer(const Model& model, const Tensor& x) {
  const std::size_t tasks = model.tasks_trained;
  if (tasks == 0) throw ContractError("class-incremental inference needs trained tasks");
  const std::size_t n = x.dim(0);
  CilResult result;
  result.entropies = Tensor(Shape{n, tasks});
  std::vector<std::vector<std::size_t>> labels(tasks);
  for (std::size_t t = 1; t <= tasks; ++t) {
    const ParamSet params = model.params(t);
    const Tensor logits = forward_point(model.spec, params, x, model.norm(t), NormMode::frozen);
    const std::size_t c = logits.row_size();
    labels[t - 1].resize(n);
    std::vector<double> probs(c);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = logits.data.data() + i * c;
      const double mx = *std::max_element(row, row + c);
      double z = 0.0;
      for (std::size_t j = 0; j < c; ++j) z += probs[j] = std::exp(row[j] - mx);
      for (double& p : probs) p /= z;
      result.entropies[i * tasks + t - 1] = entropy(probs);
      labels[t - 1][i] = static_cast<std::size_t>(std::max_element(row, row + c) - row);
    }
  }
  result.predictions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t task = argmin_entropy(std::span<const double>(result.entropies.data).subspan(i * tasks, tasks));
    result.predictions[i] = {task, labels[task - 1][i]};
  }
  return result;
}

CilAccuracy cil_evaluate(const Model& model, const TaskSequence& tasks, const AttackConfig& attack_config) {
  if (tasks.size() > model.tasks_trained) throw ContractError("class-incremental evaluation over untrained tasks");
  std::size_t total = 0, task_hits = 0, hits = 0;
  for (std::size_t t = 1; t <= tasks.size(); ++t) {
    const Dataset& test = tasks.tasks[t - 1].test;
    Tensor x = test.x;
    if (attack_config.kind != AttackKind::none) {
      const ParamSet params = model.params(t);
      const Classifier head{model.spec, params, model.norm(t)};
      AttackConfig cfg = attack_config;
      cfg.seed = derive_seed(attack_config.seed, 0xc11, t);
      x = attack(head, x, test.y, cfg);
    }
    const CilResult r = cil_infer(model, x);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const bool task_ok = r.predictions[i].task == t;
      task_hits += task_ok;
      hits += task_ok && r.predictions[i].label == test.y[i];
    }
    total += test.size();
  }
  if (total == 0) throw DataError("class-incremental evaluation on empty test sets");
  return {static_cast<double>(task_hits) / static_cast<double>(total),
          static_cast<double>(hits) / static_cast<double>(total)};
}

}  // namespace shield
