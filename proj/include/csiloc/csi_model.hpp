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

#ifndef CSILOC_CSI_MODEL_HPP
#define CSILOC_CSI_MODEL_HPP

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace csiloc
{

using Complex = std::complex<float>;
using Vec3 = std::array<double, 3>;

inline constexpr double kSpeedOfLight = 299792458.0;

// ------------------------------------------------------------------------
// Errors
// ------------------------------------------------------------------------

enum class DatasetErrorCode
{
    invariant,
    bad_magic,
    version_mismatch,
    truncated,
    label_count_mismatch,
    write_failure,
    io
};

class DatasetError : public std::runtime_error
{
public:
    DatasetError(DatasetErrorCode code, const std::string &what)
        : std::runtime_error(what), code_(code) {}

    DatasetErrorCode code() const noexcept { return code_; }

private:
    DatasetErrorCode code_;
};

// ------------------------------------------------------------------------
// Domain types
// ------------------------------------------------------------------------

// One timestamp's complex channel matrix, antennas x subcarriers, row-major by antenna.
struct CsiFrame
{
    std::size_t antennas = 0;
    std::size_t subcarriers = 0;
    std::vector<Complex> values;
    std::uint64_t timestamp_us = 0;
    std::uint32_t boot_session = 0;

    CsiFrame() = default;
    CsiFrame(std::size_t n_antennas, std::size_t n_subcarriers)
        : antennas(n_antennas), subcarriers(n_subcarriers), values(n_antennas * n_subcarriers) {}

    Complex &at(std::size_t antenna, std::size_t subcarrier) { return values[antenna * subcarriers + subcarrier]; }
    const Complex &at(std::size_t antenna, std::size_t subcarrier) const { return values[antenna * subcarriers + subcarrier]; }

    bool operator==(const CsiFrame &) const = default;
};

struct LocationGrid
{
    std::size_t rows = 3;
    std::size_t cols = 4;
    double spacing_m = 0.6;
    Vec3 tx_pos{-3.0, -0.5, 1.2};
    Vec3 rx_pos{5.0, -0.5, 1.2};

    std::size_t cell_count() const { return rows * cols; }

    // Cell (r, c) is centred at ((c + 0.5) * spacing, (r + 0.5) * spacing, height); cell index = r * cols + c.
    Vec3 cell_center(std::size_t cell, double height_m) const;

    bool operator==(const LocationGrid &) const = default;
};

// Set of occupied grid cells.
class OccupancyLabel
{
public:
    OccupancyLabel() : OccupancyLabel(0) {}
    explicit OccupancyLabel(std::size_t cells);
    OccupancyLabel(std::size_t cells, std::initializer_list<std::size_t> occupied);

    std::size_t cells() const { return cells_; }
    bool test(std::size_t cell) const;
    void set(std::size_t cell, bool occupied = true);
    std::size_t count() const;
    std::vector<std::size_t> occupied() const;

    const std::vector<std::uint64_t> &words() const { return words_; }
    static std::size_t word_count(std::size_t cells) { return cells <= 64 ? 1 : (cells + 63) / 64; }
    static OccupancyLabel from_words(std::size_t cells, std::vector<std::uint64_t> words);

    std::string to_string() const;

    bool operator==(const OccupancyLabel &) const = default;
    auto operator<=>(const OccupancyLabel &other) const { return words_ <=> other.words_; }

private:
    std::size_t cells_ = 0;
    std::vector<std::uint64_t> words_;
};

struct CsiRecording
{
    std::vector<CsiFrame> frames;
    double sample_rate_hz = 50.0;
    double center_freq_hz = 5.2e9;
    double bandwidth_hz = 80e6;
    LocationGrid grid;
    std::vector<OccupancyLabel> labels;

    // Only meaningful for non-empty recordings; an empty recording reports the stored shape.
    std::size_t antennas() const { return frames.empty() ? empty_antennas : frames.front().antennas; }
    std::size_t subcarriers() const { return frames.empty() ? empty_subcarriers : frames.front().subcarriers; }

    // Shape recorded for header-only files.
    std::size_t empty_antennas = 0;
    std::size_t empty_subcarriers = 0;

    bool operator==(const CsiRecording &other) const
    {
        return frames == other.frames && labels == other.labels && grid == other.grid &&
               sample_rate_hz == other.sample_rate_hz && center_freq_hz == other.center_freq_hz &&
               bandwidth_hz == other.bandwidth_hz && antennas() == other.antennas() &&
               subcarriers() == other.subcarriers();
    }
};

// Throws DatasetError(invariant) on any violation of the recording invariants.
// Uniform sample spacing is not part of this check; splits legitimately have gaps.
void validate(const CsiRecording &recording);

// Checks that every label has at most max_occupants cells.
void validate_occupancy(const CsiRecording &recording, std::size_t max_occupants);

// Checks that timestamps are spaced 1/sample_rate apart within 1%, over frames [first, last).
bool is_uniformly_sampled(const CsiRecording &recording, std::size_t first, std::size_t last);

// Maximal runs of consecutive frames that share a label and a boot session.
struct FrameRun
{
    std::size_t first = 0;
    std::size_t last = 0; // one past the end
};
std::vector<FrameRun> contiguous_runs(const CsiRecording &recording);

// Copy of frames [first, last) with matching labels and metadata.
CsiRecording slice(const CsiRecording &recording, std::size_t first, std::size_t last);

// Concatenate recordings that share metadata and shape.
CsiRecording concatenate(const std::vector<CsiRecording> &parts);

// ------------------------------------------------------------------------
// CSID binary format
// ------------------------------------------------------------------------

inline constexpr std::uint16_t kCsidVersion = 1;

// Returns the number of bytes written. Nothing is written when validation fails.
std::size_t write_dataset(const CsiRecording &recording, std::ostream &sink);
CsiRecording read_dataset(std::istream &source);

std::size_t write_dataset_file(const CsiRecording &recording, const std::filesystem::path &path);
CsiRecording read_dataset_file(const std::filesystem::path &path);

// ------------------------------------------------------------------------
// Splitting
// ------------------------------------------------------------------------

struct SplitFractions
{
    double train = 1.0;
    double val = 0.0;
    double test = 0.0;
};

struct SplitResult
{
    CsiRecording train;
    CsiRecording val;
    CsiRecording test;
    std::vector<std::string> warnings;
};

// Stratified by label. Per label with n frames: n_train = round_half_up(train * n) (at least 1 when
// train > 0), n_val = round_half_up((train + val) * n) - n_train, the rest goes to test.
// Frames within each split keep their original order.
SplitResult split_dataset(const CsiRecording &recording, const SplitFractions &fractions, std::uint64_t seed);

} // namespace csiloc

#endif
