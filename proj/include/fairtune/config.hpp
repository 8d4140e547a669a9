/*
 * Copyright 2026 The fairtune Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace fairtune {

// Flat "key = value" configuration with dotted section prefixes.
// Lines starting with '#' are comments. Every key must be read by the
// consumer; check_all_used() reports leftovers as configuration errors.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text,
                              const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated items; commas inside parentheses do not split.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;

  // Key suffixes after "<prefix>." in sorted order.
  std::vector<std::string> suffixes(const std::string& prefix) const;

  void check_all_used() const;

 private:
  const std::string* find(const std::string& key) const;

  std::string source_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

std::vector<std::string> split_list(std::string_view text);
double parse_double(const std::string& text, const std::string& what);
std::uint64_t parse_u64(const std::string& text, const std::string& what);

}  // namespace fairtune
