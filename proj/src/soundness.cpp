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

#include "shield/soundness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "shield/errors.hpp"
#include "shield/random.hpp"

namespace shield {

namespace {

constexpr std::size_t kChunk = 512;

struct ChunkResult {
  std::size_t violations = 0;
  double max_violation = 0.0;
  std::size_t worst_layer = 0;
};

}  // namespace

SoundnessReport soundness_oracle(const NetworkSpec& spec, const ParamSet& params, const IntervalTensor& input,
                                 std::size_t samples, std::uint64_t seed, const NormState* norm,
                                 double tolerance) {
  if (samples == 0) throw ContractError("soundness_oracle needs at least one sample");
  if (spec.batchnorm_count() > 0 && (!norm || norm->layers.size() != spec.batchnorm_count())) {
    throw ContractError("soundness_oracle needs frozen batchnorm statistics");
  }
  const std::size_t boxes = input.shape()[0];
  const std::size_t width = input.lower.row_size();
  std::vector<IntervalTensor> bounds;
  bounds.reserve(boxes);
  for (std::size_t b = 0; b < boxes; ++b) {
    IntervalTensor box;
    box.lower = slice_rows(input.lower, b, b + 1);
    box.upper = slice_rows(input.upper, b, b + 1);
    bounds.push_back(box);
  }
  std::vector<std::vector<IntervalTensor>> traces(boxes);
  for (std::size_t b = 0; b < boxes; ++b) traces[b] = forward_interval_trace(spec, params, bounds[b], norm);

  const std::size_t chunks_per_box = (samples + kChunk - 1) / kChunk;
  const auto total_chunks = static_cast<std::int64_t>(boxes * chunks_per_box);
  std::vector<ChunkResult> results(static_cast<std::size_t>(total_chunks));

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t job = 0; job < total_chunks; ++job) {
    const std::size_t box = static_cast<std::size_t>(job) / chunks_per_box;
    const std::size_t chunk = static_cast<std::size_t>(job) % chunks_per_box;
    const std::size_t count = std::min(kChunk, samples - chunk * kChunk);
    Rng rng(derive_seed(seed, box, chunk));
    Tensor x(batched(spec.input_shape, count));
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t j = 0; j < width; ++j) {
        x[s * width + j] = uniform(rng, bounds[box].lower[j], bounds[box].upper[j]);
      }
    }
    const auto points = forward_point_trace(spec, params, x, norm);
    ChunkResult& r = results[static_cast<std::size_t>(job)];
    for (std::size_t layer = 0; layer < points.size(); ++layer) {
      const Tensor& z = points[layer];
      const IntervalTensor& bnd = traces[box][layer];
      const std::size_t row = z.row_size();
      for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t j = 0; j < row; ++j) {
          const double v = z[s * row + j];
          const double lo = bnd.lower[j], hi = bnd.upper[j];
          const double excess = std::max({0.0, lo - v, v - hi});
          const double rel = excess / std::max({1.0, std::abs(lo), std::abs(hi)});
          if (rel > tolerance || !std::isfinite(v)) ++r.violations;
          if (rel > r.max_violation) {
            r.max_violation = rel;
            r.worst_layer = layer;
          }
        }
      }
    }
  }

  SoundnessReport report;
  report.points = boxes * samples;
  for (const auto& r : results) {
    report.violations += r.violations;
    if (r.max_violation > report.max_violation) {
      report.max_violation = r.max_violation;
      report.worst_layer = r.worst_layer;
    }
  }
  return report;
}

}  // namespace shield
