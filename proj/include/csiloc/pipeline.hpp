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

#ifndef CSILOC_PIPELINE_HPP
#define CSILOC_PIPELINE_HPP

#include "csiloc/calibration.hpp"
#include "csiloc/csi_model.hpp"
#include "csiloc/filtering.hpp"

namespace csiloc
{

struct PreprocessStats
{
    std::size_t runs = 0;
    double input_energy = 0.0;
    double calibrated_energy = 0.0;
    double band_removed_energy = 0.0;
    double output_energy = 0.0;
    std::size_t hampel_replaced = 0;
};

double total_energy(const CsiRecording &recording);

// compensate -> normalize_amplitude -> suppress_activity_band -> hampel_despike, applied to each
// contiguous run of frames sharing label and boot session.
CsiRecording preprocess(const CsiRecording &recording, const CalibrationProfile &profile,
                        const FilterConfig &config, PreprocessStats *stats = nullptr);

} // namespace csiloc

#endif
