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

#include "csiloc/pipeline.hpp"

#include <complex>

namespace csiloc
{

double total_energy(const CsiRecording &rec)
{
    double e = 0.0;
    for (const auto &f : rec.frames)
        for (const auto &v : f.values)
            e += std::norm(std::complex<double>(v));
    return e;
}

CsiRecording preprocess(const CsiRecording &rec, const CalibrationProfile &profile, const FilterConfig &config,
                        PreprocessStats *stats)
{
    validate(rec);
    if (!rec.frames.empty() && profile.antennas() != rec.antennas())
        throw CalibrationError("antenna-count mismatch: calibration profile has " + std::to_string(profile.antennas()) +
                               " antennas, dataset has " + std::to_string(rec.antennas()));
    validate(config, rec.sample_rate_hz);

    PreprocessStats local;
    local.input_energy = total_energy(rec);

    std::vector<CsiRecording> parts;
    for (const auto &run : contiguous_runs(rec))
    {
        CsiRecording part = slice(rec, run.first, run.last);
        for (auto &f : part.frames)
            f = normalize_amplitude(compensate(f, profile));
        local.calibrated_energy += total_energy(part);

        BandSuppressionStats band;
        part = suppress_activity_band(part, config, &band);
        local.band_removed_energy += band.removed_energy;

        std::size_t replaced = 0;
        part = hampel_despike(part, config, &replaced);
        local.hampel_replaced += replaced;
        parts.push_back(std::move(part));
        ++local.runs;
    }

    CsiRecording out = parts.empty() ? slice(rec, 0, 0) : concatenate(parts);
    local.output_energy = total_energy(out);
    if (stats)
        *stats = local;
    return out;
}

} // namespace csiloc
