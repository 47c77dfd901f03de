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

#include "shield/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shield/autodiff.hpp"
#include "shield/errors.hpp"
#include "shield/random.hpp"

namespace shield {

namespace {

constexpr std::size_t kChunk = 32;

std::size_t argmax_row(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

AttackKind parse_attack(std::string_view text) {
  if (text == "none") return AttackKind::none;
  if (text == "fgsm") return AttackKind::fgsm;
  if (text == "pgd") return AttackKind::pgd;
  throw ContractError("unknown attack kind '" + std::string(text) + "'");
}

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::pgd: return "pgd";
  }
  return "none";
}

void AttackConfig::validate() const {
  if (!(eps >= 0.0)) throw ContractError("attack eps must be non-negative");
  if (step < 0.0) throw ContractError("attack step must be positive");
  if (kind == AttackKind::pgd && iterations < 1) throw ContractError("pgd needs at least one iteration");
}

Tensor input_gradient(const Classifier& model, const Tensor& x, std::span<const std::size_t> labels) {
  ad::Tape tape;
  ad::Var input = tape.variable(x);
  const ParamVars params = constant_params(tape, model.params);
  ad::Var logits = forward_point(tape, model.spec, params, input, model.norm, NormMode::frozen);
  ad::Var loss = ad::scale(ad::cross_entropy(logits, labels), static_cast<double>(labels.size()));
  return tape.backward(loss).wrt(input);
}

Tensor signed_step(const Tensor& x, const Tensor& grad, double step) {
  require_same_shape(x, grad, "signed_step");
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
    out[i] = std::clamp(x[i] + step * s, 0.0, 1.0);
  }
  return out;
}

Tensor project(const Tensor& candidate, const Tensor& origin, double eps) {
  require_same_shape(candidate, origin, "project");
  Tensor out(candidate.shape);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double lo = std::max(0.0, origin[i] - eps), hi = std::min(1.0, origin[i] + eps);
    out[i] = std::clamp(candidate[i], std::min(lo, hi), std::max(lo, hi));
  }
  return out;
}

Tensor fgsm(const Classifier& model, const Tensor& x, std::span<const std::size_t> labels, double eps) {
  if (!(eps >= 0.0)) throw ContractError("fgsm eps must be non-negative");
  if (eps == 0.0) return x;
  return signed_step(x, input_gradient(model, x, labels), eps);
}

Tensor pgd(const Classifier& model, const Tensor& x, std::span<const std::size_t> labels, const AttackConfig& config) {
  config.validate();
  if (config.eps == 0.0) return x;
  Tensor adv = x;
  if (config.random_start) {
    Rng rng(config.seed);
    for (double& v : adv.data) v += uniform(rng, -config.eps, config.eps);
    adv = project(adv, x, config.eps);
  }
  const double step = config.step_size();
  for (std::size_t it = 0; it < config.iterations; ++it) {
    adv = project(signed_step(adv, input_gradient(model, adv, labels), step), x, config.eps);
  }
  return adv;
}

Tensor attack(const Classifier& model, const Tensor& x, std::span<const std::size_t> labels,
              const AttackConfig& config) {
  switch (config.kind) {
    case AttackKind::none: return x;
    case AttackKind::fgsm: return fgsm(model, x, labels, config.eps);
    case AttackKind::pgd: return pgd(model, x, labels, config);
  }
  return x;
}

std::vector<std::size_t> predict(const Classifier& model, const Tensor& x) {
  const Tensor logits = forward_point(model.spec, model.params, x, model.norm, NormMode::frozen);
  const std::size_t c = logits.row_size();
  std::vector<std::size_t> out(logits.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = argmax_row(std::span<const double>(logits.data).subspan(i * c, c));
  return out;
}

bool certified(const IntervalTensor& bounds, std::size_t label) {
  const std::size_t c = bounds.lower.size();
  if (label >= c) throw ContractError("label " + std::to_string(label) + " out of range");
  for (std::size_t j = 0; j < c; ++j) {
    if (j != label && !(bounds.lower[label] > bounds.upper[j])) return false;
  }
  return true;
}

std::vector<bool> certify(const Classifier& model, const Tensor& x, std::span<const std::size_t> labels, double eps) {
  const IntervalTensor out = forward_interval(model.spec, model.params, x, eps, model.norm, NormMode::frozen);
  if (labels.size() != out.lower.dim(0)) throw DimensionError("certify: label count does not match the batch");
  std::vector<bool> flags(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    IntervalTensor row(slice_rows(out.lower, i, i + 1), slice_rows(out.upper, i, i + 1));
    flags[i] = certified(row, labels[i]);
  }
  return flags;
}

SampleReport evaluate_samples(const Classifier& model, const Dataset& data, const AttackConfig& attack_config,
                              double eps_cert) {
  attack_config.validate();
  if (data.size() == 0) throw DataError("evaluation on an empty dataset");
  const std::size_t n = data.size();
  SampleReport report;
  report.clean.resize(n);
  report.attacked.resize(n);
  report.certified.resize(n);
  std::vector<char> cert(n);
  const auto chunks = static_cast<std::int64_t>((n + kChunk - 1) / kChunk);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ch = 0; ch < chunks; ++ch) {
    const std::size_t begin = static_cast<std::size_t>(ch) * kChunk;
    const std::size_t end = std::min(n, begin + kChunk);
    const Tensor x = slice_rows(data.x, begin, end);
    std::span<const std::size_t> labels(data.y.data() + begin, end - begin);
    const auto clean = predict(model, x);
    AttackConfig cfg = attack_config;
    cfg.seed = derive_seed(attack_config.seed, 0xa77, static_cast<std::uint64_t>(ch));
    const auto attacked = cfg.kind == AttackKind::none || cfg.eps == 0.0 ? clean : predict(model, attack(model, x, labels, cfg));
    const auto flags = certify(model, x, labels, eps_cert);
    for (std::size_t i = begin; i < end; ++i) {
      report.clean[i] = clean[i - begin];
      report.attacked[i] = attacked[i - begin];
      cert[i] = flags[i - begin] ? 1 : 0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) report.certified[i] = cert[i] != 0;
  return report;
}

EvalSummary summarize(const SampleReport& report, std::span<const std::size_t> labels) {
  EvalSummary s;
  s.count = labels.size();
  if (s.count == 0 || report.clean.size() != s.count) throw DataError("summary over mismatched or empty reports");
  std::size_t clean = 0, attacked = 0, verified = 0;
  for (std::size_t i = 0; i < s.count; ++i) {
    clean += report.clean[i] == labels[i];
    attacked += report.attacked[i] == labels[i];
    verified += report.clean[i] == labels[i] && report.certified[i];
  }
  const double n = static_cast<double>(s.count);
  s.accuracy = static_cast<double>(clean) / n;
  s.attacked_accuracy = static_cast<double>(attacked) / n;
  s.verified_accuracy = static_cast<double>(verified) / n;
  return s;
}

double accuracy(const Classifier& model, const Dataset& data) {
  return summarize(evaluate_samples(model, data, AttackConfig{}, 0.0), data.y).accuracy;
}

double verified_accuracy(const Classifier& model, const Dataset& data, double eps) {
  return summarize(evaluate_samples(model, data, AttackConfig{}, eps), data.y).verified_accuracy;
}

}  // namespace shield
