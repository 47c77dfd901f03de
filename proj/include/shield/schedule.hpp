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

#include <cstddef>

namespace shield {

struct ScheduleValues {
  double kappa = 1.0;
  double eps = 0.0;
};

/// Annealing at step i of E (1-based): kappa falls linearly from 1 toward a
/// floor of 1/2 reached at i = E; eps ramps linearly from 0 to the target by
/// step floor(E/2) and stays there.
ScheduleValues schedule_step(std::size_t step, std::size_t total, double target_eps);

}  // namespace shield
