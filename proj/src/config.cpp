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

#include "shield/config.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "shield/errors.hpp"

namespace shield {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t pos = 0;
  for (;;) {
    const auto comma = s.find(',', pos);
    out.push_back(trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double to_double(std::string_view text, const std::string& key) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) throw ConfigError(key, "expected a number, got '" + std::string(text) + "'");
  return v;
}

std::uint64_t to_u64(std::string_view text, const std::string& key) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema{
      {"data", "kind", "blobs", "blobs | permuted | rotated"},
      {"data", "source", "synthetic", "image source for permuted/rotated tasks: synthetic | idx"},
      {"data", "train_images", "", "IDX image file (source = idx)"},
      {"data", "train_labels", "", "IDX label file (source = idx)"},
      {"data", "test_images", "", "IDX image file (source = idx)"},
      {"data", "test_labels", "", "IDX label file (source = idx)"},
      {"data", "tasks", "3", "number of tasks (permuted, blobs)"},
      {"data", "seed", "1", "seed for permutations, splits and generators"},
      {"data", "angles", "", "comma-separated rotation per task in degrees (rotated)"},
      {"data", "interpolation", "nearest", "nearest | bilinear (rotated)"},
      {"data", "downsample", "1", "mean-pool factor applied to images"},
      {"data", "train_samples", "0", "keep the first N training images, 0 keeps all"},
      {"data", "test_samples", "0", "keep the first N test images, 0 keeps all"},
      {"data", "val_fraction", "0.1", "share of each training split held out for validation"},
      {"data", "synthetic_train", "2000", "synthetic digit training images"},
      {"data", "synthetic_test", "1000", "synthetic digit test images"},
      {"data", "synthetic_size", "16", "synthetic digit canvas size"},
      {"data", "classes", "2", "classes per blob task"},
      {"data", "dims", "2", "blob dimensionality"},
      {"data", "train_per_class", "100", "blob training samples per class"},
      {"data", "test_per_class", "100", "blob test samples per class"},
      {"data", "separation", "6", "minimum blob center distance in units of std"},
      {"data", "std", "0.05", "blob standard deviation"},
      {"net", "layers", "dense:32,act", "hidden layers; a dense output layer of width classes is appended"},
      {"net", "activation", "relu", "activation substituted for 'act' in the layer list"},
      {"net", "bn_stability", "1e-05", "batchnorm variance offset"},
      {"hypernet", "hidden", "100,100", "generator hidden widths"},
      {"hypernet", "embedding_dim", "24", "task embedding width"},
      {"hypernet", "output_scale", "0.01", "init scale of the generator output layer"},
      {"hypernet", "embedding_std", "1", "init std of task embeddings"},
      {"hypernet", "seed", "1", "generator init seed"},
      {"train", "steps", "1000", "optimization steps per task"},
      {"train", "batch", "64", "minibatch size"},
      {"train", "lr", "0.001", "learning rate"},
      {"train", "optimizer", "adam", "adam | sgd"},
      {"train", "beta", "0.01", "weight of the output-consistency regularizer"},
      {"train", "eps", "0.01", "target training radius"},
      {"train", "alpha", "1", "Beta(alpha, alpha) parameter of the mixing weight"},
      {"train", "kappa", "0.5", "fixed kappa when kappa_schedule = false"},
      {"train", "kappa_schedule", "true", "anneal kappa from 1 to 1/2"},
      {"train", "eps_schedule", "true", "ramp eps to its target over the first half"},
      {"train", "interval_mixup", "true", "train on interval mixup samples; false gives plain IBP"},
      {"train", "decay", "linear", "radius law: linear | quadratic | log | cos"},
      {"train", "seed", "1", "trainer seed"},
      {"train", "val_every", "50", "validation period for model selection, 0 disables"},
      {"train", "bn_momentum", "0.1", "running batchnorm statistics update weight"},
      {"attack", "kind", "pgd", "none | fgsm | pgd"},
      {"attack", "eps", "auto", "attack radius, auto uses train.eps"},
      {"attack", "step", "auto", "pgd step, auto uses eps / 4"},
      {"attack", "iterations", "100", "pgd iterations"},
      {"attack", "random_start", "true", "random start inside the ball"},
      {"attack", "seed", "1", "attack seed"},
      {"certify", "grid", "0,0.005,0.01,0.02,0.05", "radii for the verified-accuracy sweep"},
      {"toy", "points_per_class", "8", "toy points per class"},
      {"toy", "pairs", "0", "nearest cross-class pairs, 0 uses all"},
      {"toy", "min_gap", "0.15", "minimum max-norm distance between opposite-class points"},
      {"toy", "eps", "0.05", "certification radius of the toy"},
      {"toy", "grid", "101", "decision grid resolution per axis"},
      {"toy", "seed", "1", "toy point seed"},
      {"toy", "lambda_grid", "0,0.25,0.5,0.75,1", "mixing weights recorded in virtual.csv"},
      {"output", "dir", "runs/default", "output directory, relative paths resolve against SHIELD_OUTPUT_ROOT"},
  };
  return schema;
}

std::string Config::full_key(std::string_view section, std::string_view key) {
  return std::string(section) + "." + std::string(key);
}

Config::Config() {
  for (const auto& k : config_schema()) values_[full_key(k.section, k.key)] = std::string(k.default_value);
}

void Config::set(std::string_view section, std::string_view key, std::string value) {
  const std::string name = full_key(section, key);
  const auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError(name, "unknown configuration key");
  assignments_.push_back(name + "=" + value);
  it->second = std::move(value);
}

Config Config::parse(std::string_view text) {
  Config cfg;
  cfg.text_ = std::string(text);
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in(cfg.text_);
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no), "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    if (section.empty()) throw ConfigError(std::string(trim(line.substr(0, eq))), "key outside any section");
    std::string_view value = trim(line.substr(eq + 1));
    const auto comment = value.find_first_of("#;");
    if (comment != std::string_view::npos) value = trim(value.substr(0, comment));
    cfg.set(section, trim(line.substr(0, eq)), std::string(value));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw ConfigError(std::string(assignment), "overrides look like section.key=value");
  }
  set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
      std::string(trim(assignment.substr(eq + 1))));
}

std::string Config::resolved() const {
  std::string out;
  std::string_view section;
  for (const auto& k : config_schema()) {
    if (k.section != section) {
      if (!out.empty()) out += "\n";
      out += "[" + std::string(k.section) + "]\n";
      section = k.section;
    }
    out += std::string(k.key) + " = " + values_.at(full_key(k.section, k.key)) + "\n";
  }
  return out;
}

std::string Config::get_string(std::string_view section, std::string_view key) const {
  const auto it = values_.find(full_key(section, key));
  if (it == values_.end()) throw ConfigError(full_key(section, key), "unknown configuration key");
  return it->second;
}

double Config::get_double(std::string_view section, std::string_view key) const {
  return to_double(get_string(section, key), full_key(section, key));
}

std::size_t Config::get_size(std::string_view section, std::string_view key) const {
  return static_cast<std::size_t>(get_u64(section, key));
}

std::uint64_t Config::get_u64(std::string_view section, std::string_view key) const {
  return to_u64(get_string(section, key), full_key(section, key));
}

bool Config::get_bool(std::string_view section, std::string_view key) const {
  const std::string v = get_string(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(full_key(section, key), "expected true or false, got '" + v + "'");
}

std::vector<double> Config::get_doubles(std::string_view section, std::string_view key) const {
  const std::string v = get_string(section, key);
  std::vector<double> out;
  for (auto item : split_list(v)) out.push_back(to_double(item, full_key(section, key)));
  return out;
}

std::vector<std::size_t> Config::get_sizes(std::string_view section, std::string_view key) const {
  const std::string v = get_string(section, key);
  std::vector<std::size_t> out;
  for (auto item : split_list(v)) out.push_back(static_cast<std::size_t>(to_u64(item, full_key(section, key))));
  return out;
}

}  // namespace shield
