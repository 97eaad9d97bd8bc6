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

#ifndef CSILOC_CALIBRATION_HPP
#define CSILOC_CALIBRATION_HPP

#include "csiloc/csi_model.hpp"
#include "csiloc/kv_config.hpp"

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace csiloc
{

class CalibrationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMinCalibrationFrames = 10;

// Concentration reported when the resultant length is numerically 1.
inline constexpr double kMaxKappa = 1e12;

struct CalibrationProfile
{
    std::vector<double> delta_theta_rad;   // compensation per antenna, entry 0 = 0
    std::vector<double> kappa;             // von Mises concentration; entry 0 is +inf (reference)
    std::vector<double> resultant_length;  // mean resultant length R per antenna; entry 0 = 1
    std::size_t reference_antenna = 0;

    std::size_t antennas() const { return delta_theta_rad.size(); }
    static CalibrationProfile identity(std::size_t antennas);
};

// Circular statistics of a set of angles.
struct CircularSummary
{
    double mean_direction = 0.0;   // in [-pi, pi)
    double resultant_length = 0.0; // in [0, 1]
};

CircularSummary circular_summary(std::span<const double> angles);

// Banerjee et al. closed-form approximation kappa = R (2 - R^2) / (1 - R^2), capped at kMaxKappa.
double estimate_kappa(double resultant_length);

// Wraps to [-pi, pi).
double wrap_angle(double rad);

// Pools angle(v[a]) - angle(v[0]) over every subcarrier and frame of an equal-path rig capture.
CalibrationProfile estimate_phase_offsets(const CsiRecording &capture);

// Row a multiplied by exp(j * delta_theta[a]).
CsiFrame compensate(const CsiFrame &frame, const CalibrationProfile &profile);

// Each antenna row divided by its mean amplitude over subcarriers.
CsiFrame normalize_amplitude(const CsiFrame &frame);

// `antenna.<i>.delta_theta_rad` / `antenna.<i>.kappa` lines.
std::string profile_to_text(const CalibrationProfile &profile);
CalibrationProfile profile_from_config(const KeyValueConfig &config);
CalibrationProfile load_profile(const std::filesystem::path &path);
void save_profile(const CalibrationProfile &profile, const std::filesystem::path &path);

} // namespace csiloc

#endif
