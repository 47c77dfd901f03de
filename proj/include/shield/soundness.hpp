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

#include "shield/network.hpp"

namespace shield {

struct SoundnessReport {
  std::size_t points = 0;
  /// Layer outputs that left their bounds by more than the tolerance.
  std::size_t violations = 0;
  /// Largest relative excursion outside the bounds, over all layers and points.
  double max_violation = 0.0;
  std::size_t worst_layer = 0;
};

/// Monte Carlo check of interval propagation: draws `samples` uniform points in
/// each box of `input`, runs the point pass and compares every layer output
/// with the propagated bounds. Excursions are measured relative to
/// max(1, |bound|). Batchnorm layers use `norm` (frozen statistics).
SoundnessReport soundness_oracle(const NetworkSpec& spec, const ParamSet& params, const IntervalTensor& input,
                                 std::size_t samples, std::uint64_t seed, const NormState* norm = nullptr,
                                 double tolerance = 1e-9);

}  // namespace shield
