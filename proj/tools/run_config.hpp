// Copyright 2026 The em2g Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EM2G_TOOLS_RUN_CONFIG_HPP_
#define EM2G_TOOLS_RUN_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace em2g_cli
{

/// Bad or missing configuration value. `field()` is the short name the user
/// sees (e.g. "mu"), `key()` the dotted config key.
class ConfigError : public std::runtime_error
{
public:
  ConfigError(std::string field, std::string key, const std::string & what)
  : std::runtime_error(what), field_(std::move(field)), key_(std::move(key))
  {
  }
  const std::string & field() const noexcept { return field_; }
  const std::string & key() const noexcept { return key_; }

private:
  std::string field_;
  std::string key_;
};

/// Square matrix, row-major.
struct SquareMatrix
{
  std::size_t d = 0;
  std::vector<double> values;
};

/// Flat `dotted.key = value` configuration. Later assignments win, so
/// command-line overrides are applied with set() after load().
class RunConfig
{
public:
  static RunConfig parse(const std::string & text, const std::string & origin = "<text>");
  static RunConfig load(const std::string & path);

  /// Sorted `key = value` lines; parse(serialize()) reproduces the entries.
  std::string serialize() const;

  void set(const std::string & key, const std::string & value);
  /// Parses "key=value".
  void set_assignment(const std::string & assignment);
  bool has(const std::string & key) const;
  std::optional<std::string> get(const std::string & key) const;
  const std::map<std::string, std::string> & entries() const noexcept { return entries_; }

  std::string get_string(const std::string & key, const std::string & fallback) const;
  double get_double(const std::string & key, std::optional<double> fallback = std::nullopt) const;
  std::uint64_t get_u64(
    const std::string & key, std::optional<std::uint64_t> fallback = std::nullopt) const;
  bool get_bool(const std::string & key, bool fallback) const;
  std::vector<double> get_vector(const std::string & key) const;
  std::vector<std::uint64_t> get_u64_list(const std::string & key) const;
  /// `identity:d`, `diag:a,b,...` or a literal with rows separated by ';'.
  SquareMatrix get_sigma(const std::string & key, std::size_t d) const;

  bool operator==(const RunConfig & other) const { return entries_ == other.entries_; }

private:
  std::map<std::string, std::string> entries_;
};

/// Short field name of a dotted key: the segment after the last '.'.
std::string field_name(const std::string & key);

std::string trim(const std::string & s);
std::vector<std::string> split(const std::string & s, char sep);
/// Accepts decimal and "inf"/"-inf"/"nan". Throws ConfigError for `key`.
double parse_number(const std::string & text, const std::string & key);
/// %.17g with "inf"/"-inf"/"nan".
std::string format_number(double x);
std::string format_list(const std::vector<double> & v);

}  // namespace em2g_cli

#endif  // EM2G_TOOLS_RUN_CONFIG_HPP_
