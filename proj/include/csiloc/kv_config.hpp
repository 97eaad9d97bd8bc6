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

#ifndef CSILOC_KV_CONFIG_HPP
#define CSILOC_KV_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace csiloc
{

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Flat `key = value` text configuration. Blank lines and lines starting with '#' are ignored.
// Every lookup marks its key as used so that leftover (unknown) keys can be rejected by name.
class KeyValueConfig
{
public:
    static KeyValueConfig parse(std::istream &in, const std::string &source_name = "<config>");
    static KeyValueConfig load(const std::filesystem::path &path);

    void set(const std::string &key, const std::string &value);
    bool has(const std::string &key) const;
    const std::map<std::string, std::string> &entries() const { return entries_; }

    std::string get_string(const std::string &key, const std::string &fallback) const;
    double get_double(const std::string &key, double fallback) const;
    std::uint64_t get_u64(const std::string &key, std::uint64_t fallback) const;
    bool get_bool(const std::string &key, bool fallback) const;
    std::vector<double> get_doubles(const std::string &key, const std::vector<double> &fallback) const;
    std::vector<std::size_t> get_sizes(const std::string &key, const std::vector<std::size_t> &fallback) const;

    // Keys whose prefix matches were all consumed; throws ConfigError naming the first leftover key.
    void reject_unused(const std::string &prefix = "") const;

    // Sorted `key = value` lines.
    std::string to_text() const;

private:
    std::map<std::string, std::string> entries_;
    mutable std::set<std::string> used_;
};

// Shortest round-trip decimal representation.
std::string format_double(double value);
std::string format_doubles(const std::vector<double> &values);

} // namespace csiloc

#endif
