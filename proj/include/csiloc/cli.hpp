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

#ifndef CSILOC_CLI_HPP
#define CSILOC_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace csiloc
{

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one command line (without the program name). Normal output goes to `out`, diagnostics to `err`.
// Returns 0 on success, 1 for usage or configuration errors and 2 for data or invariant errors.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace csiloc

#endif
