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

#include "shield/network.hpp"

#include <charconv>

#include "shield/errors.hpp"

namespace shield {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense:
      return "dense";
    case LayerKind::conv2d:
      return "conv";
    case LayerKind::batchnorm:
      return "bn";
    case LayerKind::avgpool:
      return "avgpool";
    case LayerKind::maxpool:
      return "maxpool";
    case LayerKind::activation:
      return "activation";
    case LayerKind::flatten:
      return "flatten";
  }
  return "?";
}

LayerDescriptor LayerDescriptor::dense(std::size_t units) { return {LayerKind::dense, units, 0, 1, Activation::identity}; }

LayerDescriptor LayerDescriptor::conv(std::size_t channels, std::size_t kernel, std::size_t stride) {
  return {LayerKind::conv2d, channels, kernel, stride, Activation::identity};
}

LayerDescriptor LayerDescriptor::batchnorm() { return {LayerKind::batchnorm, 0, 0, 1, Activation::identity}; }

LayerDescriptor LayerDescriptor::avgpool(std::size_t window, std::size_t stride) {
  return {LayerKind::avgpool, 0, window, stride, Activation::identity};
}

LayerDescriptor LayerDescriptor::maxpool(std::size_t window, std::size_t stride) {
  return {LayerKind::maxpool, 0, window, stride, Activation::identity};
}

LayerDescriptor LayerDescriptor::act(Activation kind) { return {LayerKind::activation, 0, 0, 1, kind}; }

LayerDescriptor LayerDescriptor::flatten() { return {LayerKind::flatten, 0, 0, 1, Activation::identity}; }

Shape LayerDescriptor::output_shape(const Shape& in) const {
  switch (kind) {
    case LayerKind::dense:
      if (in.size() != 1) throw DimensionError("dense layer needs a flat input, got " + to_string(in));
      if (units == 0) throw DimensionError("dense layer with zero units");
      return {units};
    case LayerKind::conv2d:
      if (in.size() != 3) throw DimensionError("conv layer needs a [C,H,W] input, got " + to_string(in));
      if (kernel == 0 || stride == 0 || units == 0) throw DimensionError("conv layer with zero size");
      if (kernel > in[1] || kernel > in[2]) {
        throw DimensionError("conv kernel " + std::to_string(kernel) + " larger than input " + to_string(in));
      }
      return {units, (in[1] - kernel) / stride + 1, (in[2] - kernel) / stride + 1};
    case LayerKind::avgpool:
    case LayerKind::maxpool:
      if (in.size() != 3) throw DimensionError("pool layer needs a [C,H,W] input, got " + to_string(in));
      if (kernel == 0 || stride == 0) throw DimensionError("pool with zero window");
      if (kernel > in[1] || kernel > in[2]) {
        throw DimensionError("pool window " + std::to_string(kernel) + " larger than input " + to_string(in));
      }
      return {in[0], (in[1] - kernel) / stride + 1, (in[2] - kernel) / stride + 1};
    case LayerKind::flatten:
      return {numel(in)};
    case LayerKind::batchnorm:
    case LayerKind::activation:
      if (in.empty()) throw DimensionError("layer on an empty shape");
      return in;
  }
  return in;
}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find(sep, start);
    const std::size_t stop = end == std::string_view::npos ? text.size() : end;
    std::string_view piece = text.substr(start, stop - start);
    while (!piece.empty() && (piece.front() == ' ' || piece.front() == '\t')) piece.remove_prefix(1);
    while (!piece.empty() && (piece.back() == ' ' || piece.back() == '\t')) piece.remove_suffix(1);
    out.push_back(piece);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::size_t parse_size(std::string_view token, std::string_view context) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw ContractError("bad integer '" + std::string(token) + "' in layer '" + std::string(context) + "'");
  }
  return v;
}

}  // namespace

std::vector<LayerDescriptor> parse_layers(std::string_view text) {
  std::vector<LayerDescriptor> layers;
  for (std::string_view token : split(text, ',')) {
    if (token.empty()) continue;
    const auto parts = split(token, ':');
    const std::string_view name = parts[0];
    auto arg = [&](std::size_t i, std::size_t fallback) {
      return i < parts.size() ? parse_size(parts[i], token) : fallback;
    };
    if (name == "dense" && parts.size() == 2) {
      layers.push_back(LayerDescriptor::dense(arg(1, 0)));
    } else if (name == "conv" && (parts.size() == 3 || parts.size() == 4)) {
      layers.push_back(LayerDescriptor::conv(arg(1, 0), arg(2, 0), arg(3, 1)));
    } else if ((name == "bn" || name == "batchnorm") && parts.size() == 1) {
      layers.push_back(LayerDescriptor::batchnorm());
    } else if ((name == "avgpool" || name == "maxpool") && (parts.size() == 2 || parts.size() == 3)) {
      const std::size_t w = arg(1, 0);
      layers.push_back(name == "avgpool" ? LayerDescriptor::avgpool(w, arg(2, w)) : LayerDescriptor::maxpool(w, arg(2, w)));
    } else if (name == "flatten" && parts.size() == 1) {
      layers.push_back(LayerDescriptor::flatten());
    } else if (parts.size() == 1 && (name == "relu" || name == "sigmoid" || name == "identity")) {
      layers.push_back(LayerDescriptor::act(parse_activation(name)));
    } else {
      throw ContractError("unrecognised layer '" + std::string(token) + "'");
    }
  }
  return layers;
}

std::string format_layers(const std::vector<LayerDescriptor>& layers) {
  std::string out;
  for (const auto& l : layers) {
    if (!out.empty()) out += ",";
    switch (l.kind) {
      case LayerKind::dense:
        out += "dense:" + std::to_string(l.units);
        break;
      case LayerKind::conv2d:
        out += "conv:" + std::to_string(l.units) + ":" + std::to_string(l.kernel) + ":" + std::to_string(l.stride);
        break;
      case LayerKind::batchnorm:
        out += "bn";
        break;
      case LayerKind::avgpool:
      case LayerKind::maxpool:
        out += std::string(to_string(l.kind)) + ":" + std::to_string(l.kernel) + ":" + std::to_string(l.stride);
        break;
      case LayerKind::activation:
        out += std::string(to_string(l.activation));
        break;
      case LayerKind::flatten:
        out += "flatten";
        break;
    }
  }
  return out;
}

const ParamEntry& ParamLayout::at(std::size_t layer, std::string_view name) const {
  for (const auto& e : entries) {
    if (e.layer == layer && e.name == name) return e;
  }
  throw ContractError("no parameter '" + std::string(name) + "' for layer " + std::to_string(layer));
}

std::vector<Shape> NetworkSpec::layer_shapes() const {
  if (input_shape.empty()) throw DimensionError("network input shape is empty");
  if (layers.empty()) throw DimensionError("network has no layers");
  std::vector<Shape> shapes;
  Shape current = input_shape;
  for (const auto& l : layers) {
    current = l.output_shape(current);
    shapes.push_back(current);
  }
  if (current != Shape{classes}) {
    throw DimensionError("final layer produces " + to_string(current) + ", expected [" + std::to_string(classes) + "]");
  }
  return shapes;
}

ParamLayout NetworkSpec::layout() const {
  const auto shapes = layer_shapes();
  ParamLayout layout;
  auto add = [&](std::size_t layer, const char* name, Shape s) {
    layout.entries.push_back({layer, name, layout.total, s});
    layout.total += numel(s);
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Shape& in = i == 0 ? input_shape : shapes[i - 1];
    const auto& l = layers[i];
    switch (l.kind) {
      case LayerKind::dense:
        add(i, "weight", {l.units, in[0]});
        add(i, "bias", {l.units});
        break;
      case LayerKind::conv2d:
        add(i, "weight", {l.units, in[0], l.kernel, l.kernel});
        add(i, "bias", {l.units});
        break;
      case LayerKind::batchnorm:
        add(i, "gamma", {in[0]});
        add(i, "shift", {in[0]});
        break;
      default:
        break;
    }
  }
  return layout;
}

std::size_t NetworkSpec::batchnorm_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.kind == LayerKind::batchnorm;
  return n;
}

ParamSet::ParamSet(ParamLayout l, std::vector<double> values) : layout(std::move(l)), flat(std::move(values)) {
  if (flat.size() != layout.total) {
    throw DimensionError("parameter vector has " + std::to_string(flat.size()) + " entries, layout needs " +
                         std::to_string(layout.total));
  }
}

Tensor ParamSet::tensor(std::size_t layer, std::string_view name) const {
  const ParamEntry& e = layout.at(layer, name);
  const auto first = flat.begin() + static_cast<std::ptrdiff_t>(e.offset);
  return Tensor(e.shape, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(numel(e.shape))));
}

std::vector<Tensor> ParamSet::unpack() const {
  std::vector<Tensor> out;
  out.reserve(layout.entries.size());
  for (const auto& e : layout.entries) out.push_back(tensor(e.layer, e.name));
  return out;
}

ParamSet ParamSet::pack(const ParamLayout& layout, const std::vector<Tensor>& tensors) {
  if (tensors.size() != layout.entries.size()) throw DimensionError("pack: tensor count does not match layout");
  std::vector<double> flat(layout.total);
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& e = layout.entries[i];
    if (tensors[i].shape != e.shape) throw DimensionError("pack: shape mismatch for " + e.name);
    std::copy(tensors[i].data.begin(), tensors[i].data.end(), flat.begin() + static_cast<std::ptrdiff_t>(e.offset));
  }
  return ParamSet(layout, std::move(flat));
}

Shape batched(const Shape& sample_shape, std::size_t batch) {
  Shape s{batch};
  s.insert(s.end(), sample_shape.begin(), sample_shape.end());
  return s;
}

namespace {

void check_input(const NetworkSpec& spec, const Shape& x) {
  if (x.size() != spec.input_shape.size() + 1 || !std::equal(spec.input_shape.begin(), spec.input_shape.end(), x.begin() + 1)) {
    throw DimensionError("input shape " + to_string(x) + " does not match network input " +
                         to_string(spec.input_shape) + " with a batch dim");
  }
}

const interval::ChannelStats& frozen_stats(const NormState* norm, std::size_t bn_index) {
  if (!norm || bn_index >= norm->layers.size()) {
    throw ContractError("frozen batchnorm statistics missing for batchnorm layer " + std::to_string(bn_index));
  }
  return norm->layers[bn_index];
}

}  // namespace

std::vector<Tensor> forward_point_trace(const NetworkSpec& spec, const ParamSet& params, const Tensor& x,
                                        const NormState* norm, NormMode mode) {
  check_input(spec, x.shape);
  const auto shapes = spec.layer_shapes();
  std::vector<Tensor> trace;
  trace.reserve(spec.layers.size());
  Tensor z = x;
  std::size_t bn_index = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::dense:
        z = point::affine(z, params.tensor(i, "weight"), params.tensor(i, "bias"));
        break;
      case LayerKind::conv2d:
        z = point::conv2d(z, params.tensor(i, "weight"), params.tensor(i, "bias"), l.stride);
        break;
      case LayerKind::batchnorm: {
        const auto stats = mode == NormMode::batch ? point::statistics(z) : frozen_stats(norm, bn_index);
        z = point::batchnorm(z, params.tensor(i, "gamma"), params.tensor(i, "shift"), stats, spec.bn_stability);
        ++bn_index;
        break;
      }
      case LayerKind::avgpool:
        z = point::pool(z, interval::PoolKind::avg, l.kernel, l.stride);
        break;
      case LayerKind::maxpool:
        z = point::pool(z, interval::PoolKind::max, l.kernel, l.stride);
        break;
      case LayerKind::activation:
        z = point::activation(z, l.activation);
        break;
      case LayerKind::flatten:
        break;
    }
    z = z.reshaped(batched(shapes[i], x.shape[0]));
    trace.push_back(z);
  }
  return trace;
}

Tensor forward_point(const NetworkSpec& spec, const ParamSet& params, const Tensor& x, const NormState* norm,
                     NormMode mode) {
  return forward_point_trace(spec, params, x, norm, mode).back();
}

std::vector<IntervalTensor> forward_interval_trace(const NetworkSpec& spec, const ParamSet& params,
                                                   const IntervalTensor& input, const NormState* norm,
                                                   NormMode mode) {
  check_input(spec, input.shape());
  const auto shapes = spec.layer_shapes();
  const std::size_t batch = input.shape()[0];
  std::vector<IntervalTensor> trace;
  trace.reserve(spec.layers.size());
  IntervalTensor z = input;
  std::size_t bn_index = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::dense:
        z = interval::affine(z, params.tensor(i, "weight"), params.tensor(i, "bias"));
        break;
      case LayerKind::conv2d:
        z = interval::conv2d(z, params.tensor(i, "weight"), params.tensor(i, "bias"), l.stride);
        break;
      case LayerKind::batchnorm:
        if (mode == NormMode::batch) {
          z = interval::batchnorm(z, params.tensor(i, "gamma"), params.tensor(i, "shift"), spec.bn_stability);
        } else {
          z = interval::batchnorm_frozen(z, params.tensor(i, "gamma"), params.tensor(i, "shift"),
                                         frozen_stats(norm, bn_index), spec.bn_stability);
        }
        ++bn_index;
        break;
      case LayerKind::avgpool:
        z = interval::pool(z, interval::PoolKind::avg, l.kernel, l.stride);
        break;
      case LayerKind::maxpool:
        z = interval::pool(z, interval::PoolKind::max, l.kernel, l.stride);
        break;
      case LayerKind::activation:
        z = interval::activation(z, l.activation);
        break;
      case LayerKind::flatten:
        break;
    }
    const Shape s = batched(shapes[i], batch);
    z.lower = z.lower.reshaped(s);
    z.upper = z.upper.reshaped(s);
    trace.push_back(z);
  }
  return trace;
}

IntervalTensor forward_interval(const NetworkSpec& spec, const ParamSet& params, const Tensor& x, double eps,
                                const NormState* norm, NormMode mode) {
  return forward_interval_trace(spec, params, IntervalTensor::ball(x, eps), norm, mode).back();
}

WorstCaseLogits worst_case_logits(const IntervalTensor& bounds, std::size_t y_true) {
  const std::size_t classes = bounds.lower.size();
  if (bounds.lower.rank() == 2 && bounds.lower.shape[0] != 1) {
    throw DimensionError("worst_case_logits expects a single sample, got " + to_string(bounds.shape()));
  }
  if (y_true >= classes) throw ContractError("true class " + std::to_string(y_true) + " out of range");
  WorstCaseLogits out{std::vector<double>(bounds.upper.data), y_true};
  out.values[y_true] = bounds.lower[y_true];
  return out;
}

}  // namespace shield
