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

#include "csiloc/csi_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace csiloc
{

// ------------------------------------------------------------------------
// LocationGrid / OccupancyLabel
// ------------------------------------------------------------------------

Vec3 LocationGrid::cell_center(std::size_t cell, double height_m) const
{
    if (cell >= cell_count())
        throw std::out_of_range("cell index " + std::to_string(cell) + " outside grid of " +
                                std::to_string(cell_count()) + " cells");
    const std::size_t r = cell / cols;
    const std::size_t c = cell % cols;
    return {(double(c) + 0.5) * spacing_m, (double(r) + 0.5) * spacing_m, height_m};
}

OccupancyLabel::OccupancyLabel(std::size_t cells)
    : cells_(cells), words_(word_count(cells), 0) {}

OccupancyLabel::OccupancyLabel(std::size_t cells, std::initializer_list<std::size_t> occupied)
    : OccupancyLabel(cells)
{
    for (auto c : occupied)
        set(c);
}

bool OccupancyLabel::test(std::size_t cell) const
{
    if (cell >= cells_)
        throw std::out_of_range("label cell out of range");
    return (words_[cell / 64] >> (cell % 64)) & 1u;
}

void OccupancyLabel::set(std::size_t cell, bool occupied)
{
    if (cell >= cells_)
        throw std::out_of_range("label cell " + std::to_string(cell) + " out of range (" + std::to_string(cells_) + " cells)");
    const std::uint64_t bit = std::uint64_t(1) << (cell % 64);
    if (occupied)
        words_[cell / 64] |= bit;
    else
        words_[cell / 64] &= ~bit;
}

std::size_t OccupancyLabel::count() const
{
    std::size_t n = 0;
    for (auto w : words_)
        n += std::size_t(std::popcount(w));
    return n;
}

std::vector<std::size_t> OccupancyLabel::occupied() const
{
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < cells_; ++c)
        if (test(c))
            out.push_back(c);
    return out;
}

OccupancyLabel OccupancyLabel::from_words(std::size_t cells, std::vector<std::uint64_t> words)
{
    if (words.size() != word_count(cells))
        throw std::invalid_argument("label word count does not match cell count");
    OccupancyLabel label(cells);
    // Bits beyond the cell count are not allowed.
    for (std::size_t w = 0; w < words.size(); ++w)
    {
        const std::size_t valid = std::min<std::size_t>(64, cells > w * 64 ? cells - w * 64 : 0);
        const std::uint64_t mask = valid >= 64 ? ~std::uint64_t(0) : ((std::uint64_t(1) << valid) - 1);
        if (words[w] & ~mask)
            throw std::invalid_argument("label has bits set beyond the grid cell count");
    }
    label.words_ = std::move(words);
    return label;
}

std::string OccupancyLabel::to_string() const
{
    std::string s = "{";
    bool first = true;
    for (auto c : occupied())
    {
        if (!first)
            s += ",";
        s += std::to_string(c);
        first = false;
    }
    return s + "}";
}

// ------------------------------------------------------------------------
// Validation helpers
// ------------------------------------------------------------------------

static void fail(const std::string &msg)
{
    throw DatasetError(DatasetErrorCode::invariant, msg);
}

void validate(const CsiRecording &rec)
{
    const auto &g = rec.grid;
    if (g.rows * g.cols < 1)
        fail("grid must have at least one cell");
    if (!(g.spacing_m > 0.0) || !std::isfinite(g.spacing_m))
        fail("grid spacing must be positive");
    if (g.tx_pos == g.rx_pos)
        fail("tx and rx positions must differ");
    if (!(rec.sample_rate_hz > 0.0) || !std::isfinite(rec.sample_rate_hz))
        fail("sample rate must be positive");
    if (rec.labels.size() != rec.frames.size())
        fail("label count " + std::to_string(rec.labels.size()) + " differs from frame count " +
             std::to_string(rec.frames.size()));
    if (rec.frames.empty())
        return;

    const std::size_t A = rec.frames.front().antennas;
    const std::size_t S = rec.frames.front().subcarriers;
    if (A < 2 || S < 8)
        fail("frames need at least 2 antennas and 8 subcarriers");
    if (A > 0xFFFF || S > 0xFFFF || g.rows > 0xFFFF || g.cols > 0xFFFF)
        fail("dimension exceeds 16-bit header field");

    for (std::size_t i = 0; i < rec.frames.size(); ++i)
    {
        const auto &f = rec.frames[i];
        if (f.antennas != A || f.subcarriers != S || f.values.size() != A * S)
            fail("frame " + std::to_string(i) + " has inconsistent shape");
        for (const auto &v : f.values)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                fail("frame " + std::to_string(i) + " contains a non-finite value");
        if (i > 0 && f.timestamp_us <= rec.frames[i - 1].timestamp_us)
            fail("timestamps must be strictly increasing (frame " + std::to_string(i) + ")");
        if (rec.labels[i].cells() != g.cell_count())
            fail("label " + std::to_string(i) + " does not match the grid cell count");
    }
}

void validate_occupancy(const CsiRecording &rec, std::size_t max_occupants)
{
    for (std::size_t i = 0; i < rec.labels.size(); ++i)
        if (rec.labels[i].count() > max_occupants)
            fail("label " + std::to_string(i) + " has " + std::to_string(rec.labels[i].count()) +
                 " occupants, more than " + std::to_string(max_occupants));
}

bool is_uniformly_sampled(const CsiRecording &rec, std::size_t first, std::size_t last)
{
    const double expected_us = 1e6 / rec.sample_rate_hz;
    for (std::size_t i = first + 1; i < last; ++i)
    {
        const double dt = double(rec.frames[i].timestamp_us) - double(rec.frames[i - 1].timestamp_us);
        if (std::abs(dt - expected_us) > 0.01 * expected_us)
            return false;
    }
    return true;
}

std::vector<FrameRun> contiguous_runs(const CsiRecording &rec)
{
    std::vector<FrameRun> runs;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= rec.frames.size(); ++i)
    {
        const bool boundary = i == rec.frames.size() ||
                              rec.labels[i] != rec.labels[start] ||
                              rec.frames[i].boot_session != rec.frames[start].boot_session;
        if (boundary)
        {
            runs.push_back({start, i});
            start = i;
        }
    }
    return runs;
}

static CsiRecording empty_like(const CsiRecording &rec)
{
    CsiRecording out;
    out.sample_rate_hz = rec.sample_rate_hz;
    out.center_freq_hz = rec.center_freq_hz;
    out.bandwidth_hz = rec.bandwidth_hz;
    out.grid = rec.grid;
    out.empty_antennas = rec.antennas();
    out.empty_subcarriers = rec.subcarriers();
    return out;
}

CsiRecording slice(const CsiRecording &rec, std::size_t first, std::size_t last)
{
    if (first > last || last > rec.frames.size())
        throw std::out_of_range("slice bounds outside recording");
    CsiRecording out = empty_like(rec);
    out.frames.assign(rec.frames.begin() + std::ptrdiff_t(first), rec.frames.begin() + std::ptrdiff_t(last));
    out.labels.assign(rec.labels.begin() + std::ptrdiff_t(first), rec.labels.begin() + std::ptrdiff_t(last));
    return out;
}

CsiRecording concatenate(const std::vector<CsiRecording> &parts)
{
    if (parts.empty())
        return {};
    CsiRecording out = empty_like(parts.front());
    for (const auto &p : parts)
    {
        if (p.grid != out.grid || p.sample_rate_hz != out.sample_rate_hz)
            throw std::invalid_argument("cannot concatenate recordings with different metadata");
        out.frames.insert(out.frames.end(), p.frames.begin(), p.frames.end());
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    }
    return out;
}

// ------------------------------------------------------------------------
// CSID encoding
// ------------------------------------------------------------------------

namespace
{
constexpr char kMagic[4] = {'C', 'S', 'I', 'D'};

class ByteWriter
{
public:
    template <typename T>
    void put(T value)
    {
        static_assert(std::is_integral_v<T>);
        using U = std::make_unsigned_t<T>;
        U u = static_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i)
        {
            bytes_.push_back(char(u & 0xFF));
            u = U(u >> 8);
        }
    }
    void put_f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
    void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void put_raw(const char *p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    const std::vector<char> &bytes() const { return bytes_; }

private:
    std::vector<char> bytes_;
};

class ByteReader
{
public:
    explicit ByteReader(std::istream &in) : in_(in) {}

    template <typename T>
    T get()
    {
        static_assert(std::is_integral_v<T>);
        unsigned char buf[sizeof(T)];
        read(reinterpret_cast<char *>(buf), sizeof(T));
        using U = std::make_unsigned_t<T>;
        U u = 0;
        for (std::size_t i = sizeof(T); i-- > 0;)
            u = U((u << 8) | buf[i]);
        return static_cast<T>(u);
    }
    float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

    void read(char *dst, std::size_t n)
    {
        in_.read(dst, std::streamsize(n));
        if (std::size_t(in_.gcount()) != n)
            throw DatasetError(DatasetErrorCode::truncated, "CSID stream truncated");
    }

private:
    std::istream &in_;
};
} // namespace

std::size_t write_dataset(const CsiRecording &rec, std::ostream &sink)
{
    validate(rec);

    const std::size_t A = rec.antennas();
    const std::size_t S = rec.subcarriers();
    const std::size_t cells = rec.grid.cell_count();
    const std::size_t label_words = OccupancyLabel::word_count(cells);

    ByteWriter w;
    w.put_raw(kMagic, 4);
    w.put<std::uint16_t>(kCsidVersion);
    w.put<std::uint16_t>(std::uint16_t(A));
    w.put<std::uint16_t>(std::uint16_t(S));
    w.put<std::uint16_t>(std::uint16_t(rec.grid.rows));
    w.put<std::uint16_t>(std::uint16_t(rec.grid.cols));
    w.put_f64(rec.grid.spacing_m);
    w.put_f64(rec.sample_rate_hz);
    w.put_f64(rec.center_freq_hz);
    w.put_f64(rec.bandwidth_hz);
    for (double v : rec.grid.tx_pos)
        w.put_f64(v);
    for (double v : rec.grid.rx_pos)
        w.put_f64(v);
    w.put<std::uint64_t>(rec.frames.size());

    for (std::size_t i = 0; i < rec.frames.size(); ++i)
    {
        const auto &f = rec.frames[i];
        w.put<std::uint64_t>(f.timestamp_us);
        w.put<std::uint32_t>(f.boot_session);
        // Grids up to 64 cells use a single mask word; larger grids append further words.
        for (std::size_t k = 0; k < label_words; ++k)
            w.put<std::uint64_t>(rec.labels[i].words()[k]);
        for (const auto &v : f.values)
        {
            w.put_f32(v.real());
            w.put_f32(v.imag());
        }
    }

    const auto &bytes = w.bytes();
    sink.write(bytes.data(), std::streamsize(bytes.size()));
    sink.flush();
    if (!sink)
        throw DatasetError(DatasetErrorCode::write_failure, "failed to write CSID stream");
    return bytes.size();
}

CsiRecording read_dataset(std::istream &source)
{
    ByteReader r(source);
    char magic[4];
    try
    {
        r.read(magic, 4);
    }
    catch (const DatasetError &)
    {
        throw DatasetError(DatasetErrorCode::bad_magic, "stream too short for CSID magic");
    }
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw DatasetError(DatasetErrorCode::bad_magic, "not a CSID stream (bad magic)");

    const auto version = r.get<std::uint16_t>();
    if (version != kCsidVersion)
        throw DatasetError(DatasetErrorCode::version_mismatch,
                           "unsupported CSID version " + std::to_string(version));

    CsiRecording rec;
    const std::size_t A = r.get<std::uint16_t>();
    const std::size_t S = r.get<std::uint16_t>();
    rec.grid.rows = r.get<std::uint16_t>();
    rec.grid.cols = r.get<std::uint16_t>();
    rec.grid.spacing_m = r.get_f64();
    rec.sample_rate_hz = r.get_f64();
    rec.center_freq_hz = r.get_f64();
    rec.bandwidth_hz = r.get_f64();
    for (auto &v : rec.grid.tx_pos)
        v = r.get_f64();
    for (auto &v : rec.grid.rx_pos)
        v = r.get_f64();
    const auto frame_count = r.get<std::uint64_t>();

    const std::size_t cells = rec.grid.cell_count();
    const std::size_t label_words = OccupancyLabel::word_count(cells);
    const std::size_t frame_bytes = 12 + 8 * label_words + 8 * A * S;
    if (frame_count > 0 && frame_count > (std::uint64_t(1) << 40) / std::max<std::size_t>(frame_bytes, 1))
        throw DatasetError(DatasetErrorCode::truncated, "implausible frame count in CSID header");

    if (frame_count == 0)
    {
        rec.empty_antennas = A;
        rec.empty_subcarriers = S;
    }

    rec.frames.reserve(frame_count);
    rec.labels.reserve(frame_count);
    std::vector<char> payload(8 * A * S);
    for (std::uint64_t i = 0; i < frame_count; ++i)
    {
        CsiFrame f(A, S);
        f.timestamp_us = r.get<std::uint64_t>();
        f.boot_session = r.get<std::uint32_t>();
        std::vector<std::uint64_t> words(label_words);
        for (auto &word : words)
            word = r.get<std::uint64_t>();
        try
        {
            rec.labels.push_back(OccupancyLabel::from_words(cells, std::move(words)));
        }
        catch (const std::invalid_argument &e)
        {
            throw DatasetError(DatasetErrorCode::label_count_mismatch,
                               "frame " + std::to_string(i) + ": " + e.what());
        }
        r.read(payload.data(), payload.size());
        for (std::size_t k = 0; k < A * S; ++k)
        {
            std::uint32_t re_bits = 0, im_bits = 0;
            for (std::size_t b = 4; b-- > 0;)
            {
                re_bits = (re_bits << 8) | std::uint8_t(payload[8 * k + b]);
                im_bits = (im_bits << 8) | std::uint8_t(payload[8 * k + 4 + b]);
            }
            f.values[k] = {std::bit_cast<float>(re_bits), std::bit_cast<float>(im_bits)};
        }
        rec.frames.push_back(std::move(f));
    }

    if (rec.labels.size() != rec.frames.size())
        throw DatasetError(DatasetErrorCode::label_count_mismatch, "label/frame count mismatch");
    validate(rec);
    return rec;
}

std::size_t write_dataset_file(const CsiRecording &rec, const std::filesystem::path &path)
{
    validate(rec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DatasetError(DatasetErrorCode::write_failure, "cannot open " + path.string() + " for writing");
    return write_dataset(rec, out);
}

CsiRecording read_dataset_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DatasetError(DatasetErrorCode::io, "cannot open " + path.string());
    return read_dataset(in);
}

// ------------------------------------------------------------------------
// Splitting
// ------------------------------------------------------------------------

static std::size_t round_half_up(double x)
{
    return std::size_t(std::floor(x + 0.5));
}

SplitResult split_dataset(const CsiRecording &rec, const SplitFractions &fr, std::uint64_t seed)
{
    if (fr.train < 0.0 || fr.val < 0.0 || fr.test < 0.0)
        throw std::invalid_argument("split fractions must be non-negative");
    if (std::abs(fr.train + fr.val + fr.test - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1");

    std::map<OccupancyLabel, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < rec.frames.size(); ++i)
        by_label[rec.labels[i]].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<int> assignment(rec.frames.size(), 2);
    SplitResult result;

    for (auto &[label, idx] : by_label)
    {
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t n = idx.size();
        std::size_t n_train = std::min(n, round_half_up(fr.train * double(n)));
        if (fr.train > 0.0 && n_train == 0)
            n_train = 1;
        std::size_t n_train_val = std::min(n, std::max(n_train, round_half_up((fr.train + fr.val) * double(n))));
        if (n_train == 0)
            result.warnings.push_back("label " + label.to_string() + " has no training frames");
        for (std::size_t k = 0; k < n; ++k)
            assignment[idx[k]] = k < n_train ? 0 : (k < n_train_val ? 1 : 2);
    }

    result.train = empty_like(rec);
    result.val = empty_like(rec);
    result.test = empty_like(rec);
    CsiRecording *parts[3] = {&result.train, &result.val, &result.test};
    for (std::size_t i = 0; i < rec.frames.size(); ++i)
    {
        parts[assignment[i]]->frames.push_back(rec.frames[i]);
        parts[assignment[i]]->labels.push_back(rec.labels[i]);
    }
    return result;
}

} // namespace csiloc
