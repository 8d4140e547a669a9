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

#include "fairtune/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fairtune/error.hpp"

namespace fairtune {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  std::string current;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if ((c == ',' || c == ';') && depth == 0) {
      items.push_back(trim(current));
      current.clear();
      continue;
    }
    current += c;
  }
  if (depth != 0) throw ConfigError("unbalanced parentheses in '" + std::string(text) + "'");
  const std::string last = trim(current);
  if (!last.empty() || !items.empty()) items.push_back(last);
  for (const auto& item : items) {
    if (item.empty()) throw ConfigError("empty item in list '" + std::string(text) + "'");
  }
  return items;
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError(what + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(what + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& source) {
  KeyValueConfig cfg;
  cfg.source_ = source;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(source + ":" + std::to_string(number) + ": empty key");
    }
    if (!cfg.values_.emplace(key, value).second) {
      throw ConfigError(source + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

const std::string* KeyValueConfig::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  const std::string* v = find(key);
  return v ? *v : fallback;
}

std::string KeyValueConfig::require_string(const std::string& key) const {
  const std::string* v = find(key);
  if (!v || v->empty()) throw ConfigError(source_ + ": missing required key '" + key + "'");
  return *v;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const std::string* v = find(key);
  return v ? parse_double(*v, key) : fallback;
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
  const std::string* v = find(key);
  return v ? static_cast<std::size_t>(parse_u64(*v, key)) : fallback;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const std::string* v = find(key);
  return v ? parse_u64(*v, key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::get_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
  const std::string* v = find(key);
  return v ? split_list(*v) : fallback;
}

std::vector<std::string> KeyValueConfig::suffixes(const std::string& prefix) const {
  std::vector<std::string> out;
  const std::string head = prefix + ".";
  for (const auto& [key, value] : values_) {
    if (key.size() > head.size() && key.compare(0, head.size(), head) == 0) {
      out.push_back(key.substr(head.size()));
    }
  }
  return out;
}

void KeyValueConfig::check_all_used() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError(source_ + ": unknown keys: " + unknown);
}

}  // namespace fairtune
