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

#include "shield/schedule.hpp"

#include <algorithm>
#include <string>

#include "shield/errors.hpp"

namespace shield {

ScheduleValues schedule_step(std::size_t step, std::size_t total, double target_eps) {
  if (total == 0) throw ContractError("schedule needs at least one step");
  if (step < 1 || step > total) {
    throw ContractError("schedule step " + std::to_string(step) + " outside [1, " + std::to_string(total) + "]");
  }
  if (!(target_eps >= 0.0)) throw ContractError("schedule eps must be non-negative");
  const double i = static_cast<double>(step);
  const double e = static_cast<double>(total);
  ScheduleValues v;
  v.kappa = std::max(0.5, 1.0 - i / (2.0 * e));
  v.eps = step <= total / 2 ? 2.0 * i * target_eps / e : target_eps;
  return v;
}

}  // namespace shield
