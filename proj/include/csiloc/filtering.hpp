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

#ifndef CSILOC_FILTERING_HPP
#define CSILOC_FILTERING_HPP

#include "csiloc/csi_model.hpp"
#include "csiloc/kv_config.hpp"

#include <complex>
#include <span>
#include <vector>

namespace csiloc
{

class FilterError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct FilterConfig
{
    double cutoff_hz = 2.0;
    std::size_t hampel_window = 7;
    double hampel_nsigma = 3.0;
};

void validate(const FilterConfig &config, double sample_rate_hz);
FilterConfig filter_config_from(const KeyValueConfig &config);

inline constexpr double kMadToSigma = 1.4826;

// ------------------------------------------------------------------------
// Series kernels (double precision)
// ------------------------------------------------------------------------

// Zeroes every DFT bin with 0 < |f| <= cutoff_hz, keeps DC and all other bins, and transforms back.
// Returns the energy removed (sum over samples of |x|^2, by Parseval).
double suppress_band(std::span<std::complex<double>> series, double sample_rate_hz, double cutoff_hz);

// Centered window, truncated at the edges. A sample deviating from the window median by more than
// nsigma * 1.4826 * MAD is replaced by the median. Statistics come from the unmodified input.
// Returns the indices that were replaced.
std::vector<std::size_t> hampel(std::span<double> series, std::size_t window, double nsigma);

// ------------------------------------------------------------------------
// Recording-level operations; each (antenna, subcarrier) pair is an independent time series.
// ------------------------------------------------------------------------

struct BandSuppressionStats
{
    double input_energy = 0.0;
    double removed_energy = 0.0;
};

CsiRecording suppress_activity_band(const CsiRecording &recording, const FilterConfig &config,
                                    BandSuppressionStats *stats = nullptr);

// Real and imaginary parts are despiked independently. Returns the recording; `replaced` receives
// the number of replaced real-valued samples.
CsiRecording hampel_despike(const CsiRecording &recording, const FilterConfig &config, std::size_t *replaced = nullptr);

} // namespace csiloc

#endif
