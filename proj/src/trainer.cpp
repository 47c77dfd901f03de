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

#include "shield/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "shield/errors.hpp"
#include "shield/random.hpp"
#include "shield/schedule.hpp"

namespace shield {

namespace {

struct Batch {
  Tensor xa, xb;
  std::vector<std::size_t> ya, yb;
};

/// Epoch-wise shuffled minibatches.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch, Rng& rng) : n_(n), batch_(std::min(batch, n)), rng_(rng), order_(n) {
    std::iota(order_.begin(), order_.end(), 0);
    reshuffle();
  }

  std::vector<std::size_t> next() {
    if (pos_ + batch_ > n_) reshuffle();
    std::vector<std::size_t> rows(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  order_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_));
    pos_ += batch_;
    return rows;
  }

 private:
  void reshuffle() {
    for (std::size_t i = n_; i > 1; --i) std::swap(order_[i - 1], order_[uniform_index(rng_, i)]);
    pos_ = 0;
  }

  std::size_t n_, batch_;
  Rng& rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

std::vector<std::size_t> labels_of(const Dataset& d, std::span<const std::size_t> rows) {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(d.y[r]);
  return out;
}

void update_running(NormState& running, const std::vector<interval::ChannelStats>& batch, double momentum,
                    bool first) {
  if (first) {
    running.layers = batch;
    return;
  }
  for (std::size_t l = 0; l < batch.size(); ++l) {
    for (std::size_t c = 0; c < batch[l].mean.size(); ++c) {
      running.layers[l].mean[c] = (1.0 - momentum) * running.layers[l].mean[c] + momentum * batch[l].mean[c];
      running.layers[l].var[c] = (1.0 - momentum) * running.layers[l].var[c] + momentum * batch[l].var[c];
    }
  }
}

Tensor offset(const Tensor& x, double delta) {
  Tensor out = x;
  for (double& v : out.data) v += delta;
  return out;
}

}  // namespace

void TrainerConfig::validate() const {
  loss.validate();
  if (steps < 2) throw ContractError("train.steps must be at least 2");
  if (batch < 1 || (interval_mixup && batch < 2)) throw ContractError("train.batch must be at least 2 with mixup");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw ContractError("train.bn_momentum must lie in (0, 1]");
}

Model make_model(const NetworkSpec& spec, const HypernetConfig& hnet, std::size_t tasks) {
  Model m;
  m.spec = spec;
  m.hnet = Hypernetwork(hnet, tasks, spec.layout().total);
  m.norms.resize(tasks);
  return m;
}

double validation_objective(const Model& model, std::size_t task_id, const Dataset& val, const TrainerConfig& config,
                            std::span<const Tensor> targets) {
  ad::Tape tape;
  const ParamSet params = model.params(task_id);
  const ParamVars vars = constant_params(tape, params);
  const NormState* norm = model.norm(task_id);
  ad::Var x = tape.constant(val.x);
  ad::Var point = forward_point(tape, model.spec, vars, x, norm, NormMode::frozen);
  TapeForward bounds = forward_interval(tape, model.spec, vars, tape.constant(offset(val.x, -config.loss.eps)),
                                        tape.constant(offset(val.x, config.loss.eps)), norm, NormMode::frozen);
  const double kappa = config.kappa_schedule ? 0.5 : config.loss.kappa;
  double value = loss::ibp(point, bounds.lower, bounds.upper, val.y, kappa).item();
  if (!targets.empty() && config.loss.beta > 0.0) {
    std::vector<ad::Var> w;
    for (const auto& t : model.hnet.weights()) w.push_back(tape.constant(t));
    value += config.loss.beta * loss::regularization(tape, model.hnet, w, targets).item();
  }
  return value;
}

TaskLog train_task(Model& model, const Task& task, std::size_t task_id, const TrainerConfig& config,
                   std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  config.validate();
  if (task_id != model.tasks_trained + 1) {
    throw ContractError("tasks must be trained in order: expected task " + std::to_string(model.tasks_trained + 1) +
                        ", got " + std::to_string(task_id));
  }
  if (task.train.size() == 0) throw DataError("task " + std::to_string(task_id) + " has no training data");
  if (task.classes != model.spec.classes) throw DataError("task class count does not match the network");
  if (config.interval_mixup && pairs.empty() && task.train.size() < 2) {
    throw DataError("mixup needs at least two training samples");
  }
  Hypernetwork& hnet = model.hnet;
  for (std::size_t j = 1; j < task_id; ++j) {
    if (!hnet.frozen(j)) hnet.freeze(j);
  }
  const std::vector<Tensor> targets = task_id > 1 ? snapshot_outputs(hnet, task_id - 1) : std::vector<Tensor>{};
  const ParamLayout layout = model.spec.layout();
  const bool has_bn = model.spec.batchnorm_count() > 0;
  const Dataset& train = task.train;

  Rng rng(derive_seed(config.seed, 0x7a5c, task_id));
  BatchSampler sampler(pairs.empty() ? train.size() : pairs.size(), config.batch, rng);
  Optimizer opt(config.optimizer);
  NormState running;

  TaskLog log;
  log.selected_value = std::numeric_limits<double>::quiet_NaN();
  const bool select = config.val_every > 0 && task.val.size() > 0;
  std::vector<Tensor> best_weights;
  Tensor best_embedding;
  NormState best_norm;
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t step = 1; step <= config.steps; ++step) {
    const ScheduleValues sched = schedule_step(step, config.steps, config.loss.eps);
    StepLog s;
    s.task = task_id;
    s.step = step;
    s.kappa = config.kappa_schedule ? sched.kappa : config.loss.kappa;
    s.eps = config.eps_schedule ? sched.eps : config.loss.eps;

    Batch b;
    if (!pairs.empty()) {
      const auto picks = sampler.next();
      std::vector<std::size_t> ra, rb;
      // Both orientations of every pair, so the mixed batch is symmetric in the two classes.
      for (std::size_t p : picks) {
        ra.push_back(pairs[p].first);
        rb.push_back(pairs[p].second);
        ra.push_back(pairs[p].second);
        rb.push_back(pairs[p].first);
      }
      b.xa = gather_rows(train.x, ra);
      b.xb = gather_rows(train.x, rb);
      b.ya = labels_of(train, ra);
      b.yb = labels_of(train, rb);
    } else {
      const auto rows = sampler.next();
      b.xa = gather_rows(train.x, rows);
      b.ya = labels_of(train, rows);
      if (config.interval_mixup) {
        std::vector<std::size_t> partner(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          std::size_t j = uniform_index(rng, rows.size() - 1);
          if (j >= i) ++j;
          partner[i] = rows[j];
        }
        b.xb = gather_rows(train.x, partner);
        b.yb = labels_of(train, partner);
      }
    }

    Tensor input = b.xa;
    double radius = s.eps;
    if (config.interval_mixup) {
      s.lambda = beta_sample(rng, config.loss.alpha, config.loss.alpha);
      s.eps_virtual = scaled_radius(s.lambda, s.eps, config.loss.decay);
      input = mixup_sample(b.xa, b.xb, s.lambda);
      radius = s.eps_virtual;
    }

    ad::Tape tape;
    std::vector<ad::Var> wvars;
    for (const auto& w : hnet.weights()) wvars.push_back(tape.variable(w));
    ad::Var evar = tape.variable(hnet.embedding(task_id));
    ad::Var theta = hnet.generate(tape, evar, wvars);
    const ParamVars params = split_params(theta, layout);
    ad::Var point = forward_point(tape, model.spec, params, tape.constant(input), nullptr, NormMode::batch);
    TapeForward bounds = forward_interval(tape, model.spec, params, tape.constant(offset(input, -radius)),
                                          tape.constant(offset(input, radius)), nullptr, NormMode::batch);
    ad::Var fit = config.interval_mixup
                      ? loss::interval_mixup(point, bounds.lower, bounds.upper, b.ya, b.yb, s.lambda, s.kappa)
                      : loss::ibp(point, bounds.lower, bounds.upper, b.ya, s.kappa);
    ad::Var total = fit;
    s.fit_loss = fit.item();
    if (!targets.empty()) {
      ad::Var reg = loss::regularization(tape, hnet, wvars, targets);
      s.reg_loss = reg.item();
      total = ad::add(fit, ad::scale(reg, config.loss.beta));
    }
    s.loss = total.item();
    if (!std::isfinite(s.loss)) {
      throw DivergenceError("non-finite loss at task " + std::to_string(task_id) + " step " + std::to_string(step));
    }
    if (has_bn) update_running(running, bounds.batch_stats, config.bn_momentum, step == 1);

    const ad::Gradients grads = tape.backward(total);
    std::vector<Tensor*> targets_ptr;
    std::vector<Tensor> g;
    for (std::size_t k = 0; k < wvars.size(); ++k) {
      targets_ptr.push_back(&hnet.weights()[k]);
      g.push_back(grads.wrt(wvars[k]));
    }
    targets_ptr.push_back(&hnet.mutable_embedding(task_id));
    g.push_back(grads.wrt(evar));
    opt.step(targets_ptr, g);
    log.steps.push_back(s);

    const bool second_half = step > config.steps / 2;
    if (select && second_half && (step % config.val_every == 0 || step == config.steps)) {
      model.norms[task_id - 1] = running;
      const double v = validation_objective(model, task_id, task.val, config, targets);
      if (v < best) {
        best = v;
        best_weights = hnet.weights();
        best_embedding = hnet.embedding(task_id);
        best_norm = running;
        log.selected_step = step;
        log.selected_value = v;
      }
    }
  }

  if (select && !best_weights.empty()) {
    hnet.weights() = std::move(best_weights);
    hnet.mutable_embedding(task_id) = std::move(best_embedding);
    model.norms[task_id - 1] = std::move(best_norm);
  } else {
    model.norms[task_id - 1] = std::move(running);
    log.selected_step = config.steps;
  }
  hnet.freeze(task_id);
  model.tasks_trained = task_id;
  return log;
}

SequenceResult train_sequence(Model& model, const TaskSequence& tasks, const TrainerConfig& config,
                              const TaskCallback& on_task_end) {
  if (tasks.size() == 0) throw DataError("empty task sequence");
  if (tasks.size() > model.hnet.task_count()) throw ContractError("more tasks than hypernetwork embeddings");
  SequenceResult result;
  result.accuracy = ResultMatrix(tasks.size());
  for (std::size_t t = 1; t <= tasks.size(); ++t) {
    result.logs.push_back(train_task(model, tasks.tasks[t - 1], t, config));
    for (std::size_t s = 1; s <= t; ++s) {
      const ParamSet params = model.params(s);
      result.accuracy.set(t, s, accuracy(Classifier{model.spec, params, model.norm(s)}, tasks.tasks[s - 1].test));
    }
    if (on_task_end) on_task_end(model, t, result.accuracy);
  }
  return result;
}

}  // namespace shield
