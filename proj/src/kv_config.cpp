// SPDX-License-Identifier: Apache-2.0
//
// csiloc - instantaneous multi-person indoor localization from WiFi CSI
// Copyright (C) 2026 The csiloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "csiloc/kv_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace csiloc
{

static std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

KeyValueConfig KeyValueConfig::parse(std::istream &in, const std::string &source_name)
{
    KeyValueConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source_name + ":" + std::to_string(lineno) + ": expected `key = value`");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw ConfigError(source_name + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.entries_.count(key))
            throw ConfigError(source_name + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.entries_[key] = trim(t.substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string());
}

void KeyValueConfig::set(const std::string &key, const std::string &value)
{
    entries_[key] = value;
}

bool KeyValueConfig::has(const std::string &key) const
{
    return entries_.count(key) != 0;
}

std::string KeyValueConfig::get_string(const std::string &key, const std::string &fallback) const
{
    auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    used_.insert(key);
    return it->second;
}

static double parse_double(const std::string &key, const std::string &text)
{
    const std::string t = trim(text);
    if (t == "inf" || t == "+inf")
        return INFINITY;
    if (t == "-inf")
        return -INFINITY;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a number");
    return v;
}

double KeyValueConfig::get_double(const std::string &key, double fallback) const
{
    if (!has(key))
        return fallback;
    return parse_double(key, get_string(key, ""));
}

std::uint64_t KeyValueConfig::get_u64(const std::string &key, std::uint64_t fallback) const
{
    if (!has(key))
        return fallback;
    const std::string t = trim(get_string(key, ""));
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError("key '" + key + "': cannot parse '" + t + "' as a non-negative integer");
    return v;
}

bool KeyValueConfig::get_bool(const std::string &key, bool fallback) const
{
    if (!has(key))
        return fallback;
    const std::string t = trim(get_string(key, ""));
    if (t == "true" || t == "1" || t == "yes")
        return true;
    if (t == "false" || t == "0" || t == "no")
        return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + t + "'");
}

static std::vector<std::string> split_list(const std::string &text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(trim(item));
    return out;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string &key, const std::vector<double> &fallback) const
{
    if (!has(key))
        return fallback;
    std::vector<double> out;
    for (const auto &item : split_list(get_string(key, "")))
        out.push_back(parse_double(key, item));
    return out;
}

std::vector<std::size_t> KeyValueConfig::get_sizes(const std::string &key, const std::vector<std::size_t> &fallback) const
{
    if (!has(key))
        return fallback;
    std::vector<std::size_t> out;
    for (const auto &item : split_list(get_string(key, "")))
    {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size())
            throw ConfigError("key '" + key + "': cannot parse '" + item + "' as an integer");
        out.push_back(v);
    }
    return out;
}

void KeyValueConfig::reject_unused(const std::string &prefix) const
{
    for (const auto &[key, value] : entries_)
        if (key.rfind(prefix, 0) == 0 && !used_.count(key))
            throw ConfigError("unknown configuration key '" + key + "'");
}

std::string KeyValueConfig::to_text() const
{
    std::string out;
    for (const auto &[key, value] : entries_)
        out += key + " = " + value + "\n";
    return out;
}

std::string format_double(double value)
{
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string format_doubles(const std::vector<double> &values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (i)
            out += ", ";
        out += format_double(values[i]);
    }
    return out;
}

} // namespace csiloc
