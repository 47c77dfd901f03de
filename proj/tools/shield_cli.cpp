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

// Command-line front end: shield {train,eval,certify,toy2d}.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shield/commands.hpp"
#include "shield/errors.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kDivergence = 4 };

shield::Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  shield::Config cfg = path.empty() ? shield::Config() : shield::Config::load(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

std::vector<std::string> merged_overrides(const std::string& path, const std::vector<std::string>& overrides) {
  std::vector<std::string> all;
  if (!path.empty()) all = shield::Config::load(path).assignments();
  all.insert(all.end(), overrides.begin(), overrides.end());
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shield: continual learning with interval-certified target networks"};
  app.require_subcommand(1);
  std::string config_path, checkpoint;
  std::vector<std::string> overrides;

  auto* train = app.add_subcommand("train", "train a task sequence");
  train->add_option("--config", config_path, "experiment configuration")->required();
  train->add_option("--set", overrides, "override, section.key=value");

  auto* eval = app.add_subcommand("eval", "clean, attacked and verified accuracy of a checkpoint");
  auto* certify = app.add_subcommand("certify", "verified accuracy over an eps grid");
  for (auto* sub : {eval, certify}) {
    sub->add_option("--checkpoint", checkpoint, "checkpoint written by train")->required();
    sub->add_option("--config", config_path, "keys overriding the checkpoint's configuration");
    sub->add_option("--set", overrides, "override, section.key=value");
  }

  auto* toy = app.add_subcommand("toy2d", "two-dimensional interval mixup toy");
  toy->add_option("--config", config_path, "experiment configuration")->required();
  toy->add_option("--set", overrides, "override, section.key=value");

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::path out;
    if (*train) {
      out = shield::cmd_train(load_config(config_path, overrides));
    } else if (*eval) {
      out = shield::cmd_eval(checkpoint, merged_overrides(config_path, overrides));
    } else if (*certify) {
      out = shield::cmd_certify(checkpoint, merged_overrides(config_path, overrides));
    } else {
      out = shield::cmd_toy2d(load_config(config_path, overrides));
    }
    std::cout << out.string() << "\n";
    return kOk;
  } catch (const shield::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const shield::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const shield::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
