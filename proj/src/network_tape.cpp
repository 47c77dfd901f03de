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

// Differentiable forward passes, composed from autodiff primitives.

#include "shield/errors.hpp"
#include "shield/network.hpp"

namespace shield {

ad::Var ParamVars::at(std::size_t layer, std::string_view name) const {
  for (std::size_t i = 0; i < layout->entries.size(); ++i) {
    const auto& e = layout->entries[i];
    if (e.layer == layer && e.name == name) return vars[i];
  }
  throw ContractError("no parameter '" + std::string(name) + "' for layer " + std::to_string(layer));
}

ParamVars split_params(ad::Var flat, const ParamLayout& layout) {
  if (flat.size() != layout.total) {
    throw DimensionError("generated parameter vector has " + std::to_string(flat.size()) +
                         " entries, layout needs " + std::to_string(layout.total));
  }
  ParamVars out{&layout, {}};
  out.vars.reserve(layout.entries.size());
  for (const auto& e : layout.entries) out.vars.push_back(ad::slice(flat, e.offset, e.shape));
  return out;
}

ParamVars constant_params(ad::Tape& tape, const ParamSet& params) {
  ParamVars out{&params.layout, {}};
  for (const auto& t : params.unpack()) out.vars.push_back(tape.constant(t));
  return out;
}

namespace {

ad::Var dense(ad::Var x, ad::Var w, ad::Var b) { return ad::add_channel(ad::matmul_nt(x, w), b); }

ad::Var conv(ad::Var x, ad::Var k, ad::Var b, std::size_t stride) {
  return ad::add_channel(ad::conv2d(x, k, stride), b);
}

ad::Var normalise(ad::Var x, ad::Var mean, ad::Var var, ad::Var gamma, ad::Var shift, double stability) {
  ad::Var centred = ad::sub_channel(x, mean);
  ad::Var scaled = ad::div_channel(centred, ad::sqrt(ad::add_scalar(var, stability)));
  return ad::add_channel(ad::mul_channel(scaled, gamma), shift);
}

struct FrozenVars {
  ad::Var mean;
  ad::Var var;
};

FrozenVars frozen_vars(ad::Tape& tape, const NormState* norm, std::size_t index) {
  if (!norm || index >= norm->layers.size()) {
    throw ContractError("frozen batchnorm statistics missing for batchnorm layer " + std::to_string(index));
  }
  return {tape.constant(norm->layers[index].mean), tape.constant(norm->layers[index].var)};
}

}  // namespace

ad::Var forward_point(ad::Tape& tape, const NetworkSpec& spec, const ParamVars& params, ad::Var x,
                      const NormState* norm, NormMode mode, std::vector<interval::ChannelStats>* stats_out) {
  const auto shapes = spec.layer_shapes();
  const std::size_t batch = x.shape()[0];
  ad::Var z = x;
  std::size_t bn_index = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::dense:
        z = dense(z, params.at(i, "weight"), params.at(i, "bias"));
        break;
      case LayerKind::conv2d:
        z = conv(z, params.at(i, "weight"), params.at(i, "bias"), l.stride);
        break;
      case LayerKind::batchnorm: {
        ad::Var m, v;
        if (mode == NormMode::batch) {
          m = ad::channel_mean(z);
          v = ad::channel_variance(z);
          if (stats_out) stats_out->push_back({m.value(), v.value()});
        } else {
          const auto f = frozen_vars(tape, norm, bn_index);
          m = f.mean;
          v = f.var;
        }
        z = normalise(z, m, v, params.at(i, "gamma"), params.at(i, "shift"), spec.bn_stability);
        ++bn_index;
        break;
      }
      case LayerKind::avgpool:
        z = ad::avg_pool(z, l.kernel, l.stride);
        break;
      case LayerKind::maxpool:
        z = ad::max_pool(z, l.kernel, l.stride);
        break;
      case LayerKind::activation:
        z = ad::activation(z, l.activation);
        break;
      case LayerKind::flatten:
        z = ad::reshape(z, batched(shapes[i], batch));
        break;
    }
  }
  return z;
}

TapeForward forward_interval(ad::Tape& tape, const NetworkSpec& spec, const ParamVars& params, ad::Var lower,
                             ad::Var upper, const NormState* norm, NormMode mode) {
  const auto shapes = spec.layer_shapes();
  const std::size_t batch = lower.shape()[0];
  TapeForward out{lower, upper, {}};
  ad::Var& lo = out.lower;
  ad::Var& hi = out.upper;
  std::size_t bn_index = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::dense:
      case LayerKind::conv2d: {
        ad::Var mu = ad::scale(ad::add(hi, lo), 0.5);
        ad::Var r = ad::scale(ad::sub(hi, lo), 0.5);
        ad::Var w = params.at(i, "weight");
        ad::Var b = params.at(i, "bias");
        ad::Var mu_out, r_out;
        if (l.kind == LayerKind::dense) {
          mu_out = dense(mu, w, b);
          r_out = ad::matmul_nt(r, ad::abs(w));
        } else {
          mu_out = conv(mu, w, b, l.stride);
          r_out = ad::conv2d(r, ad::abs(w), l.stride);
        }
        lo = ad::sub(mu_out, r_out);
        hi = ad::add(mu_out, r_out);
        break;
      }
      case LayerKind::batchnorm: {
        ad::Var m, v;
        if (mode == NormMode::batch) {
          ad::Var both = ad::concat_rows(lo, hi);
          m = ad::channel_mean(both);
          v = ad::channel_variance(both);
          out.batch_stats.push_back({m.value(), v.value()});
        } else {
          const auto f = frozen_vars(tape, norm, bn_index);
          m = f.mean;
          v = f.var;
        }
        ad::Var gamma = params.at(i, "gamma");
        ad::Var shift = params.at(i, "shift");
        ad::Var a = normalise(lo, m, v, gamma, shift, spec.bn_stability);
        ad::Var c = normalise(hi, m, v, gamma, shift, spec.bn_stability);
        lo = ad::minimum(a, c);
        hi = ad::maximum(a, c);
        ++bn_index;
        break;
      }
      case LayerKind::avgpool:
        lo = ad::avg_pool(lo, l.kernel, l.stride);
        hi = ad::avg_pool(hi, l.kernel, l.stride);
        break;
      case LayerKind::maxpool:
        lo = ad::max_pool(lo, l.kernel, l.stride);
        hi = ad::max_pool(hi, l.kernel, l.stride);
        break;
      case LayerKind::activation:
        lo = ad::activation(lo, l.activation);
        hi = ad::activation(hi, l.activation);
        break;
      case LayerKind::flatten:
        lo = ad::reshape(lo, batched(shapes[i], batch));
        hi = ad::reshape(hi, batched(shapes[i], batch));
        break;
    }
  }
  return out;
}

}  // namespace shield
