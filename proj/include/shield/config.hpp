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
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace shield {

struct ConfigKey {
  std::string_view section;
  std::string_view key;
  std::string_view default_value;
  std::string_view help;
};

/// Every accepted key with its default.
const std::vector<ConfigKey>& config_schema();

/// INI-style experiment configuration: `[section]` headers, `key = value`
/// lines, `#` or `;` comments. Keys outside the schema are rejected with a
/// ConfigError naming them; missing keys take their schema default.
class Config {
 public:
  Config();

  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  /// Applies "section.key=value".
  void apply_override(std::string_view assignment);
  void set(std::string_view section, std::string_view key, std::string value);

  const std::string& text() const { return text_; }
  /// "section.key=value" for every key set explicitly, in order.
  const std::vector<std::string>& assignments() const { return assignments_; }
  /// Every key, defaults included, as a loadable document.
  std::string resolved() const;

  std::string get_string(std::string_view section, std::string_view key) const;
  double get_double(std::string_view section, std::string_view key) const;
  std::size_t get_size(std::string_view section, std::string_view key) const;
  std::uint64_t get_u64(std::string_view section, std::string_view key) const;
  bool get_bool(std::string_view section, std::string_view key) const;
  std::vector<double> get_doubles(std::string_view section, std::string_view key) const;
  std::vector<std::size_t> get_sizes(std::string_view section, std::string_view key) const;

 private:
  static std::string full_key(std::string_view section, std::string_view key);

  std::map<std::string, std::string> values_;
  std::string text_;
  std::vector<std::string> assignments_;
};

}  // namespace shield
