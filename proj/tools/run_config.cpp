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

#include "run_config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace em2g_cli
{

namespace
{

[[noreturn]] void bad(const std::string & key, const std::string & what)
{
  throw ConfigError(field_name(key), key, "config field '" + field_name(key) + "' (" + key +
                                            "): " + what);
}

}  // namespace

std::string trim(const std::string & s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string & s, char sep)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) {
      return out;
    }
    start = pos + 1;
  }
}

std::string field_name(const std::string & key)
{
  const auto dot = key.rfind('.');
  return dot == std::string::npos ? key : key.substr(dot + 1);
}

double parse_number(const std::string & text, const std::string & key)
{
  const std::string t = trim(text);
  if (t.empty()) {
    bad(key, "expected a number, got an empty value");
  }
  errno = 0;
  char * end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  // ERANGE on underflow still yields the correctly rounded subnormal.
  if (end != t.c_str() + t.size() || (errno == ERANGE && std::isinf(v))) {
    bad(key, "not a number: '" + t + "'");
  }
  return v;
}

std::string format_number(double x)
{
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_list(const std::vector<double> & v)
{
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) {
      out += ',';
    }
    out += format_number(v[i]);
  }
  return out;
}

RunConfig RunConfig::parse(const std::string & text, const std::string & origin)
{
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || trim(t.substr(0, eq)).empty()) {
      throw ConfigError(
        "", "", origin + ":" + std::to_string(line_no) + ": expected 'key = value', got '" + t +
                  "'");
    }
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("config", "config", "cannot read config file '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path);
}

std::string RunConfig::serialize() const
{
  std::string out;
  for (const auto & [k, v] : entries_) {
    out += k + " = " + v + "\n";
  }
  return out;
}

void RunConfig::set(const std::string & key, const std::string & value)
{
  const std::string k = trim(key);
  if (k.empty() || k.find_first_of(" \t=#") != std::string::npos) {
    throw ConfigError("", k, "invalid config key '" + k + "'");
  }
  const std::string v = trim(value);
  if (v.find_first_of("\r\n") != std::string::npos) {
    throw ConfigError(field_name(k), k, "config value for '" + k + "' spans lines");
  }
  entries_[k] = v;
}

void RunConfig::set_assignment(const std::string & assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("", "", "expected key=value, got '" + assignment + "'");
  }
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

bool RunConfig::has(const std::string & key) const { return entries_.count(key) > 0; }

std::optional<std::string> RunConfig::get(const std::string & key) const
{
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::string RunConfig::get_string(const std::string & key, const std::string & fallback) const
{
  return get(key).value_or(fallback);
}

double RunConfig::get_double(const std::string & key, std::optional<double> fallback) const
{
  const auto v = get(key);
  if (!v) {
    if (!fallback) {
      bad(key, "missing required value");
    }
    return *fallback;
  }
  return parse_number(*v, key);
}

std::uint64_t RunConfig::get_u64(
  const std::string & key, std::optional<std::uint64_t> fallback) const
{
  const auto v = get(key);
  if (!v) {
    if (!fallback) {
      bad(key, "missing required value");
    }
    return *fallback;
  }
  const std::string t = trim(*v);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
    bad(key, "expected a nonnegative integer, got '" + t + "'");
  }
  errno = 0;
  const unsigned long long n = std::strtoull(t.c_str(), nullptr, 10);
  if (errno == ERANGE) {
    bad(key, "integer out of range: '" + t + "'");
  }
  return n;
}

bool RunConfig::get_bool(const std::string & key, bool fallback) const
{
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  if (*v == "true" || *v == "1" || *v == "yes") {
    return true;
  }
  if (*v == "false" || *v == "0" || *v == "no") {
    return false;
  }
  bad(key, "expected true or false, got '" + *v + "'");
}

std::vector<double> RunConfig::get_vector(const std::string & key) const
{
  const auto v = get(key);
  if (!v || trim(*v).empty()) {
    bad(key, "missing required value");
  }
  std::vector<double> out;
  for (const auto & part : split(*v, ',')) {
    out.push_back(parse_number(part, key));
  }
  return out;
}

std::vector<std::uint64_t> RunConfig::get_u64_list(const std::string & key) const
{
  const auto v = get(key);
  if (!v || trim(*v).empty()) {
    bad(key, "missing required value");
  }
  std::vector<std::uint64_t> out;
  for (const auto & part : split(*v, ',')) {
    RunConfig one;
    one.set(key, part);
    out.push_back(one.get_u64(key));
  }
  return out;
}

SquareMatrix RunConfig::get_sigma(const std::string & key, std::size_t d) const
{
  const auto v = get(key);
  SquareMatrix m;
  m.d = d;
  m.values.assign(d * d, 0.0);
  const std::string text = v ? trim(*v) : "";
  if (text.empty()) {
    for (std::size_t i = 0; i < d; ++i) {
      m.values[i * d + i] = 1.0;
    }
    return m;
  }
  if (text.rfind("identity:", 0) == 0) {
    RunConfig one;
    one.set(key, text.substr(9));
    if (one.get_u64(key) != d) {
      bad(key, "identity dimension " + text.substr(9) + " does not match d = " + std::to_string(d));
    }
    for (std::size_t i = 0; i < d; ++i) {
      m.values[i * d + i] = 1.0;
    }
    return m;
  }
  if (text.rfind("diag:", 0) == 0) {
    const auto parts = split(text.substr(5), ',');
    if (parts.size() != d) {
      bad(key, "diag has " + std::to_string(parts.size()) + " entries, expected " +
                 std::to_string(d));
    }
    for (std::size_t i = 0; i < d; ++i) {
      m.values[i * d + i] = parse_number(parts[i], key);
    }
    return m;
  }
  const auto rows = split(text, ';');
  if (rows.size() != d) {
    bad(key, "matrix has " + std::to_string(rows.size()) + " rows, expected " + std::to_string(d));
  }
  for (std::size_t r = 0; r < d; ++r) {
    const auto cols = split(rows[r], ',');
    if (cols.size() != d) {
      bad(key, "matrix row " + std::to_string(r + 1) + " has " + std::to_string(cols.size()) +
                 " entries, expected " + std::to_string(d));
    }
    for (std::size_t c = 0; c < d; ++c) {
      m.values[r * d + c] = parse_number(cols[c], key);
    }
  }
  return m;
}

}  // namespace em2g_cli
