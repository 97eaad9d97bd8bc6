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

#ifndef CSILOC_CHANNEL_SIM_HPP
#define CSILOC_CHANNEL_SIM_HPP

#include "csiloc/csi_model.hpp"
#include "csiloc/kv_config.hpp"

#include <complex>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace csiloc
{

// One propagation path. Static paths have modulation_freq_hz = 0 and modulation_depth = 0.
// array_cosine is the cosine between the arrival direction and the receive array axis; it sets the
// per-antenna geometric phase.
struct PathComponent
{
    std::complex<double> gain{1.0, 0.0};
    double delay_s = 0.0;
    double array_cosine = 0.0;
    double modulation_freq_hz = 0.0;
    double modulation_depth = 0.0;

    bool operator==(const PathComponent &) const = default;
};

struct ScenarioConfig
{
    std::uint64_t seed = 1;
    std::size_t antennas = 4;
    std::size_t subcarriers = 64;
    double sample_rate_hz = 50.0;
    double center_freq_hz = 5.2e9;
    double bandwidth_hz = 80e6;
    double antenna_spacing_m = 0.03;
    std::vector<PathComponent> static_paths;
    double noise_sigma = 0.1; // complex AWGN standard deviation per entry
    std::pair<double, double> alpha_range{0.5, 2.0};
    std::vector<double> antenna_offsets_rad{0.0, 0.19, -0.87, -1.74};
    std::pair<double, double> limb_freq_range_hz{1.0, 2.0};
    double body_cross_section = 0.5;
    double limb_gain_ratio = 0.3;
    double body_height_m = 1.0;
    std::size_t max_occupants = 3;
    LocationGrid grid;
};

// Throws std::invalid_argument when the scenario violates its invariants.
void validate(const ScenarioConfig &scenario);

// Per-reboot amplitude gain and common phase.
struct BootSession
{
    std::uint32_t session_id = 0;
    double alpha = 1.0;
    double common_phase_rad = 0.0;
};

// Deterministic in (scenario.seed, session_id).
BootSession draw_boot_session(const ScenarioConfig &scenario, std::uint32_t session_id);

double los_delay_s(const LocationGrid &grid);

// Unit vector of the receive array axis: horizontal, perpendicular to the tx-rx baseline.
Vec3 array_axis(const LocationGrid &grid);

// Line-of-sight path plus n_paths - 1 scatterers with delays in [LOS, LOS + 100 ns] and gains that
// decay with excess delay.
std::vector<PathComponent> synth_static_paths(std::uint64_t seed, std::size_t n_paths, const LocationGrid &grid);

// Quasi-static reflection off a person standing in `cell`.
PathComponent body_path(std::size_t cell, const LocationGrid &grid, double body_cross_section, double body_height_m = 1.0);

// Limb reflection: body geometry, gain scaled by limb_gain_ratio, amplitude modulated at a frequency
// drawn from scenario.limb_freq_range_hz.
PathComponent limb_path(const ScenarioConfig &scenario, std::size_t cell, std::mt19937_64 &rng);

// Limb path of `cell` as used by the renderer (rng derived from scenario seed and cell).
PathComponent scenario_limb_path(const ScenarioConfig &scenario, std::size_t cell);

// All paths contributing for the given occupants: static, then body and limb per occupant.
std::vector<PathComponent> scenario_paths(const ScenarioConfig &scenario, const OccupancyLabel &occupants);

// Noiseless contribution of one path to one frame at time t (before alpha and antenna offsets).
std::vector<std::complex<double>> path_response(const ScenarioConfig &scenario, const PathComponent &path, double t_s);

// frame_index seeds the noise together with scenario seed, session and occupants.
CsiFrame render_frame(const ScenarioConfig &scenario, const BootSession &session,
                      const OccupancyLabel &occupants, double t_s, std::uint64_t frame_index = 0);

// Frames at t = i / sample_rate_hz; every frame carries `occupants` as label.
// threads > 1 renders frames in parallel; output does not depend on the thread count.
CsiRecording render_recording(const ScenarioConfig &scenario, const BootSession &session,
                              const OccupancyLabel &occupants, std::size_t n_frames, double sample_rate_hz,
                              unsigned threads = 1);

// Splitter/attenuator rig: every antenna sees the same single path, so the only cross-antenna phase
// difference is the intrinsic offset (plus noise).
CsiRecording render_calibration_capture(const ScenarioConfig &scenario, const BootSession &session, std::size_t n_frames);

// Flat key-value form under the `scenario.` prefix. Static paths are stored explicitly as
// scenario.static_path.<i>.*; when absent they are synthesised from the seed and
// scenario.n_static_paths.
ScenarioConfig scenario_from_config(const KeyValueConfig &config);
std::string scenario_to_text(const ScenarioConfig &scenario);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

} // namespace csiloc

#endif
