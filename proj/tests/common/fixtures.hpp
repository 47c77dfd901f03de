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

// Random networks, parameters and small datasets shared by the unit and
// acceptance tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "shield/data.hpp"
#include "shield/network.hpp"
#include "shield/random.hpp"

namespace shield::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.data) v = uniform(rng, lo, hi);
  return t;
}

inline ParamSet random_params(const NetworkSpec& spec, Rng& rng, double scale = 1.0) {
  const ParamLayout layout = spec.layout();
  std::vector<double> flat(layout.total);
  for (double& v : flat) v = scale * uniform(rng, -1.0, 1.0);
  return ParamSet(layout, std::move(flat));
}

/// Frozen statistics with positive variances for every batchnorm layer.
inline NormState random_norm(const NetworkSpec& spec, Rng& rng) {
  NormState norm;
  const auto shapes = spec.layer_shapes();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind != LayerKind::batchnorm) continue;
    const std::size_t channels = shapes[i][0];
    interval::ChannelStats s{Tensor(Shape{channels}), Tensor(Shape{channels})};
    for (std::size_t c = 0; c < channels; ++c) {
      s.mean[c] = uniform(rng, -0.5, 0.5);
      s.var[c] = uniform(rng, 0.2, 2.0);
    }
    norm.layers.push_back(s);
  }
  return norm;
}

/// One of several dense or convolutional topologies covering every layer kind.
inline NetworkSpec random_spec(Rng& rng) {
  const Activation acts[] = {Activation::relu, Activation::sigmoid, Activation::identity};
  const Activation act = acts[uniform_index(rng, 3)];
  NetworkSpec spec;
  spec.classes = 2 + uniform_index(rng, 3);
  switch (uniform_index(rng, 3)) {
    case 0: {
      spec.input_shape = {2 + uniform_index(rng, 5)};
      const std::size_t depth = 1 + uniform_index(rng, 3);
      for (std::size_t d = 0; d < depth; ++d) {
        spec.layers.push_back(LayerDescriptor::dense(3 + uniform_index(rng, 6)));
        if (uniform_index(rng, 2)) spec.layers.push_back(LayerDescriptor::batchnorm());
        spec.layers.push_back(LayerDescriptor::act(act));
      }
      break;
    }
    case 1: {
      spec.input_shape = {1 + uniform_index(rng, 2), 6, 6};
      spec.layers.push_back(LayerDescriptor::conv(2 + uniform_index(rng, 3), 3, 1));
      spec.layers.push_back(LayerDescriptor::batchnorm());
      spec.layers.push_back(LayerDescriptor::act(act));
      spec.layers.push_back(uniform_index(rng, 2) ? LayerDescriptor::avgpool(2, 2) : LayerDescriptor::maxpool(2, 2));
      spec.layers.push_back(LayerDescriptor::flatten());
      spec.layers.push_back(LayerDescriptor::dense(5));
      spec.layers.push_back(LayerDescriptor::act(act));
      break;
    }
    default: {
      spec.input_shape = {1, 7, 7};
      spec.layers.push_back(LayerDescriptor::conv(3, 3, 2));
      spec.layers.push_back(LayerDescriptor::act(act));
      spec.layers.push_back(LayerDescriptor::maxpool(2, 1));
      spec.layers.push_back(LayerDescriptor::flatten());
      break;
    }
  }
  spec.layers.push_back(LayerDescriptor::dense(spec.classes));
  spec.validate();
  return spec;
}

inline Shape per_sample(const NetworkSpec& spec, std::size_t batch) { return batched(spec.input_shape, batch); }

/// Two-class dataset of two well separated Gaussian blobs in [0,1]^dims.
inline Dataset two_blobs(std::size_t per_class, std::size_t dims, std::uint64_t seed, double gap = 0.5) {
  Rng rng(seed);
  Dataset d;
  d.classes = 2;
  d.x = Tensor(Shape{2 * per_class, dims});
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const std::size_t label = i % 2;
    for (std::size_t k = 0; k < dims; ++k) {
      const double centre = 0.5 + (label ? gap / 2 : -gap / 2);
      d.x[i * dims + k] = std::fmin(1.0, std::fmax(0.0, centre + 0.05 * normal(rng)));
    }
    d.y.push_back(label);
  }
  return d;
}

}  // namespace shield::testing
