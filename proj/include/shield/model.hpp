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

#include <vector>

#include "shield/hypernetwork.hpp"
#include "shield/network.hpp"

namespace shield {

/// Everything needed to evaluate any trained task: the target topology, the
/// generator and the frozen batchnorm statistics of each task.
struct Model {
  NetworkSpec spec;
  Hypernetwork hnet;
  std::vector<NormState> norms;
  std::size_t tasks_trained = 0;

  ParamSet params(std::size_t task) const { return hnet.generate(task, spec.layout()); }
  const NormState* norm(std::size_t task) const {
    return task >= 1 && task <= norms.size() && !norms[task - 1].empty() ? &norms[task - 1] : nullptr;
  }
};

}  // namespace shield
