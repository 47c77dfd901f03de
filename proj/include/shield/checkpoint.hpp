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
#include <filesystem>
#include <string>
#include <string_view>

#include "shield/metrics.hpp"
#include "shield/model.hpp"

namespace shield {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  std::uint64_t seed = 0;
  /// Accuracy table through model.tasks_trained.
  ResultMatrix accuracy;
  /// Resolved experiment configuration the model was trained with.
  std::string config;
};

/// JSON document; reals are written in shortest round-trip form so that
/// parse(serialize(c)) reproduces every value bit for bit.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace shield
