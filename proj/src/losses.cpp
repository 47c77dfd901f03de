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

#include "shield/losses.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "shield/errors.hpp"

namespace shield {

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ContractError(std::string(what) + " must lie in [0, 1], got " + std::to_string(v));
}

Tensor one_hot(std::size_t rows, std::size_t classes, std::span<const std::size_t> labels) {
  if (labels.size() != rows) throw DimensionError("label count does not match the batch");
  Tensor m(Shape{rows, classes});
  for (std::size_t i = 0; i < rows; ++i) {
    if (labels[i] >= classes) throw ContractError("label " + std::to_string(labels[i]) + " out of range");
    m[i * classes + labels[i]] = 1.0;
  }
  return m;
}

ad::Var blend(ad::Var a, ad::Var b, double weight) { return ad::add(ad::scale(a, weight), ad::scale(b, 1.0 - weight)); }

}  // namespace

DecayKind parse_decay(std::string_view text) {
  if (text == "linear") return DecayKind::linear;
  if (text == "quadratic") return DecayKind::quadratic;
  if (text == "log") return DecayKind::log;
  if (text == "cos") return DecayKind::cos;
  throw ContractError("unknown decay kind '" + std::string(text) + "'");
}

std::string_view to_string(DecayKind kind) {
  switch (kind) {
    case DecayKind::linear: return "linear";
    case DecayKind::quadratic: return "quadratic";
    case DecayKind::log: return "log";
    case DecayKind::cos: return "cos";
  }
  return "linear";
}

void LossConfig::validate() const {
  check_unit(kappa, "kappa");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ContractError("beta must be non-negative");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ContractError("eps must be non-negative");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ContractError("alpha must be positive");
}

double scaled_radius(double lambda, double eps, DecayKind kind) {
  check_unit(lambda, "lambda");
  if (!(eps >= 0.0)) throw ContractError("eps must be non-negative");
  const double s = std::abs(2.0 * lambda - 1.0);
  switch (kind) {
    case DecayKind::linear: return eps * s;
    case DecayKind::quadratic: return eps * s * s;
    case DecayKind::log: return eps * std::log2(1.0 + s);
    case DecayKind::cos: return eps * (1.0 - std::cos(std::numbers::pi * s)) / 2.0;
  }
  return eps * s;
}

Tensor mixup_sample(const Tensor& a, const Tensor& b, double lambda) {
  check_unit(lambda, "lambda");
  require_same_shape(a, b, "mixup_sample");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = lambda * a[i] + (1.0 - lambda) * b[i];
  return out;
}

std::vector<Tensor> snapshot_outputs(const Hypernetwork& hnet, std::size_t count) {
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t j = 1; j <= count; ++j) {
    out.emplace_back(Shape{1, hnet.output_dim()}, hnet.generate_flat(j));
  }
  return out;
}

namespace loss {

ad::Var worst_case_logits(ad::Var lower, ad::Var upper, std::span<const std::size_t> labels) {
  if (lower.shape().size() != 2 || lower.shape() != upper.shape()) {
    throw DimensionError("worst_case_logits expects matching [B, C] bounds");
  }
  ad::Var mask = lower.tape()->constant(one_hot(lower.shape()[0], lower.shape()[1], labels));
  return ad::add(upper, ad::mul(mask, ad::sub(lower, upper)));
}

ad::Var ibp(ad::Var point_logits, ad::Var lower, ad::Var upper, std::span<const std::size_t> labels, double kappa) {
  check_unit(kappa, "kappa");
  ad::Var point = ad::cross_entropy(point_logits, labels);
  ad::Var worst = ad::cross_entropy(worst_case_logits(lower, upper, labels), labels);
  return blend(point, worst, kappa);
}

ad::Var mixup(ad::Var logits, std::span<const std::size_t> labels_a, std::span<const std::size_t> labels_b,
              double lambda) {
  check_unit(lambda, "lambda");
  return blend(ad::cross_entropy(logits, labels_a), ad::cross_entropy(logits, labels_b), lambda);
}

ad::Var interval_mixup(ad::Var point_logits, ad::Var lower, ad::Var upper, std::span<const std::size_t> labels_a,
                       std::span<const std::size_t> labels_b, double lambda, double kappa) {
  check_unit(kappa, "kappa");
  ad::Var nominal = mixup(point_logits, labels_a, labels_b, lambda);
  ad::Var worst_a = ad::cross_entropy(worst_case_logits(lower, upper, labels_a), labels_a);
  ad::Var worst_b = ad::cross_entropy(worst_case_logits(lower, upper, labels_b), labels_b);
  return blend(nominal, blend(worst_a, worst_b, lambda), kappa);
}

ad::Var regularization(ad::Tape& tape, const Hypernetwork& hnet, std::span<const ad::Var> weights,
                       std::span<const Tensor> targets) {
  if (targets.empty()) throw ContractError("regularization needs at least one earlier task");
  ad::Var total;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    ad::Var out = hnet.generate(tape, tape.constant(hnet.embedding(j + 1)), weights);
    ad::Var diff = ad::sub(out, tape.constant(targets[j]));
    ad::Var sq = ad::sum(ad::mul(diff, diff));
    total = total.valid() ? ad::add(total, sq) : sq;
  }
  return ad::scale(total, 1.0 / static_cast<double>(targets.size()));
}

}  // namespace loss

}  // namespace shield
