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

#include <filesystem>
#include <string>
#include <vector>

#include "shield/attacks.hpp"
#include "shield/config.hpp"
#include "shield/data.hpp"
#include "shield/hypernetwork.hpp"
#include "shield/network.hpp"
#include "shield/trainer.hpp"

namespace shield {

/// Environment variable under which relative output directories are placed.
inline constexpr const char* kOutputRootEnv = "SHIELD_OUTPUT_ROOT";

TaskSequence build_tasks(const Config& config);
NetworkSpec build_network(const Config& config, const Shape& input_shape, std::size_t classes);
HypernetConfig build_hypernet(const Config& config);
TrainerConfig build_trainer(const Config& config);
AttackConfig build_attack(const Config& config);
std::filesystem::path output_directory(const Config& config);

/// printf("%.17g").
std::string format_real(double v);

/// Trains the configured sequence; writes config.ini, config.resolved.ini,
/// log.csv, results.csv, metrics.csv and a checkpoint per task. Returns the output directory.
std::filesystem::path cmd_train(const Config& config);

/// Clean, FGSM and PGD accuracy plus verified accuracy for every task of a
/// checkpoint, with AA, BWT and class-incremental rows, into eval.csv.
std::filesystem::path cmd_eval(const std::filesystem::path& checkpoint, const std::vector<std::string>& overrides);

/// Verified accuracy over certify.grid into certify.csv and certify_tasks.csv.
std::filesystem::path cmd_certify(const std::filesystem::path& checkpoint, const std::vector<std::string>& overrides);

/// Two-class toy trained only on interval mixup samples; writes grid.csv,
/// points.csv, virtual.csv and summary.csv.
std::filesystem::path cmd_toy2d(const Config& config);

}  // namespace shield
