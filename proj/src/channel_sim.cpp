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

#include "csiloc/channel_sim.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace csiloc
{

namespace
{
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kScatterSpreadS = 100e-9;
constexpr double kScatterDecayS = 25e-9;
constexpr double kRigCableDelayS = 5e-9;
constexpr std::uint64_t kLimbStream = 0x6c696d62ULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f6973ULL;
constexpr std::uint64_t kBootStream = 0x626f6f74ULL;

double norm3(const Vec3 &v)
{
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

Vec3 sub3(const Vec3 &a, const Vec3 &b)
{
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

double dot3(const Vec3 &a, const Vec3 &b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

std::uint64_t label_hash(const OccupancyLabel &label)
{
    std::uint64_t h = mix_seed(0x6c61626cULL, label.cells());
    for (auto w : label.words())
        h = mix_seed(h, w);
    return h;
}
} // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
    // splitmix64 finaliser over a combined word
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void validate(const ScenarioConfig &s)
{
    if (s.static_paths.empty())
        throw std::invalid_argument("scenario needs at least one static path");
    if (!(s.noise_sigma >= 0.0))
        throw std::invalid_argument("noise_sigma must be >= 0");
    if (!(s.alpha_range.first > 0.0) || s.alpha_range.second < s.alpha_range.first)
        throw std::invalid_argument("alpha range must satisfy 0 < low <= high");
    if (s.antennas < 2 || s.subcarriers < 8)
        throw std::invalid_argument("scenario needs at least 2 antennas and 8 subcarriers");
    if (s.antenna_offsets_rad.size() != s.antennas)
        throw std::invalid_argument("antenna_offsets_rad must have one entry per antenna");
    if (s.antenna_offsets_rad[0] != 0.0)
        throw std::invalid_argument("antenna_offsets_rad[0] must be 0 (reference antenna)");
    if (s.limb_freq_range_hz.second < s.limb_freq_range_hz.first || s.limb_freq_range_hz.first < 0.0)
        throw std::invalid_argument("limb frequency range must satisfy 0 <= low <= high");
    if (!(s.sample_rate_hz > 0.0))
        throw std::invalid_argument("sample rate must be positive");
    if (s.grid.cell_count() < 1 || !(s.grid.spacing_m > 0.0) || s.grid.tx_pos == s.grid.rx_pos)
        throw std::invalid_argument("invalid location grid");
    for (const auto &p : s.static_paths)
    {
        if (!(p.delay_s >= 0.0))
            throw std::invalid_argument("path delay must be non-negative");
        if (p.modulation_freq_hz == 0.0 && p.modulation_depth != 0.0)
            throw std::invalid_argument("static path with modulation depth");
    }
}

BootSession draw_boot_session(const ScenarioConfig &s, std::uint32_t session_id)
{
    std::mt19937_64 rng(mix_seed(mix_seed(s.seed, kBootStream), session_id));
    std::uniform_real_distribution<double> alpha(s.alpha_range.first, s.alpha_range.second);
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    BootSession b;
    b.session_id = session_id;
    b.alpha = alpha(rng);
    b.common_phase_rad = phase(rng);
    return b;
}

double los_delay_s(const LocationGrid &grid)
{
    return norm3(sub3(grid.tx_pos, grid.rx_pos)) / kSpeedOfLight;
}

Vec3 array_axis(const LocationGrid &grid)
{
    const double dx = grid.rx_pos[0] - grid.tx_pos[0];
    const double dy = grid.rx_pos[1] - grid.tx_pos[1];
    const double h = std::hypot(dx, dy);
    if (h == 0.0)
        return {1.0, 0.0, 0.0}; // vertical baseline
    return {-dy / h, dx / h, 0.0};
}

std::vector<PathComponent> synth_static_paths(std::uint64_t seed, std::size_t n_paths, const LocationGrid &grid)
{
    if (n_paths < 1)
        throw std::invalid_argument("n_paths must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<PathComponent> paths;
    PathComponent los;
    los.gain = {1.0, 0.0};
    los.delay_s = los_delay_s(grid);
    const Vec3 to_tx = sub3(grid.tx_pos, grid.rx_pos);
    los.array_cosine = dot3(to_tx, array_axis(grid)) / norm3(to_tx);
    paths.push_back(los);

    for (std::size_t i = 1; i < n_paths; ++i)
    {
        PathComponent p;
        const double excess = kScatterSpreadS * unit(rng);
        p.delay_s = los.delay_s + excess;
        const double magnitude = (0.3 + 0.5 * unit(rng)) * std::exp(-excess / kScatterDecayS);
        p.gain = std::polar(magnitude, kTwoPi * unit(rng));
        p.array_cosine = 2.0 * unit(rng) - 1.0;
        paths.push_back(p);
    }
    return paths;
}

PathComponent body_path(std::size_t cell, const LocationGrid &grid, double body_cross_section, double body_height_m)
{
    const Vec3 p = grid.cell_center(cell, body_height_m);
    const double d_tx = norm3(sub3(p, grid.tx_pos));
    const double d_rx = norm3(sub3(p, grid.rx_pos));
    const double baseline = norm3(sub3(grid.tx_pos, grid.rx_pos));

    PathComponent path;
    path.delay_s = (d_tx + d_rx) / kSpeedOfLight;
    // Bistatic scattering, normalised so that a unit cross-section at the baseline scale matches the LOS gain.
    path.gain = {body_cross_section * baseline / (d_tx * d_rx), 0.0};
    const Vec3 to_body = sub3(p, grid.rx_pos);
    path.array_cosine = d_rx > 0.0 ? dot3(to_body, array_axis(grid)) / d_rx : 0.0;
    return path;
}

PathComponent limb_path(const ScenarioConfig &s, std::size_t cell, std::mt19937_64 &rng)
{
    PathComponent path = body_path(cell, s.grid, s.body_cross_section, s.body_height_m);
    path.gain *= s.limb_gain_ratio;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto [lo, hi] = s.limb_freq_range_hz;
    const double u = unit(rng);
    path.modulation_freq_hz = lo == hi ? lo : lo + (hi - lo) * u;
    path.modulation_depth = 1.0 - unit(rng); // (0, 1]
    return path;
}

PathComponent scenario_limb_path(const ScenarioConfig &s, std::size_t cell)
{
    std::mt19937_64 rng(mix_seed(mix_seed(s.seed, kLimbStream), cell));
    return limb_path(s, cell, rng);
}

std::vector<PathComponent> scenario_paths(const ScenarioConfig &s, const OccupancyLabel &occupants)
{
    if (occupants.cells() != s.grid.cell_count())
        throw std::invalid_argument("occupancy label does not match the scenario grid");
    std::vector<PathComponent> paths = s.static_paths;
    for (auto cell : occupants.occupied())
    {
        paths.push_back(body_path(cell, s.grid, s.body_cross_section, s.body_height_m));
        paths.push_back(scenario_limb_path(s, cell));
    }
    return paths;
}

std::vector<std::complex<double>> path_response(const ScenarioConfig &s, const PathComponent &path, double t_s)
{
    const std::size_t A = s.antennas, S = s.subcarriers;
    std::vector<std::complex<double>> out(A * S);
    const double modulation = path.modulation_depth == 0.0
                                  ? 1.0
                                  : 1.0 + path.modulation_depth * std::sin(kTwoPi * path.modulation_freq_hz * t_s);
    const std::complex<double> g = path.gain * modulation;
    const double df = s.bandwidth_hz / double(S);
    for (std::size_t a = 0; a < A; ++a)
    {
        const double tau = path.delay_s - double(a) * s.antenna_spacing_m * path.array_cosine / kSpeedOfLight;
        for (std::size_t k = 0; k < S; ++k)
        {
            const double f = s.center_freq_hz + (double(k) - double(S / 2)) * df;
            out[a * S + k] = g * std::polar(1.0, -kTwoPi * f * tau);
        }
    }
    return out;
}

namespace
{
// Static and body paths do not depend on time; limb paths are re-evaluated per frame.
struct PreparedChannel
{
    std::vector<std::complex<double>> constant;
    std::vector<PathComponent> modulated;
};

PreparedChannel prepare(const ScenarioConfig &s, const std::vector<PathComponent> &paths)
{
    PreparedChannel pc;
    pc.constant.assign(s.antennas * s.subcarriers, {0.0, 0.0});
    for (const auto &p : paths)
    {
        if (p.modulation_depth != 0.0)
        {
            pc.modulated.push_back(p);
            continue;
        }
        const auto r = path_response(s, p, 0.0);
        for (std::size_t i = 0; i < r.size(); ++i)
            pc.constant[i] += r[i];
    }
    return pc;
}

CsiFrame render_prepared(const ScenarioConfig &s, const BootSession &session, const PreparedChannel &pc,
                         std::uint64_t noise_key, double t_s, std::uint64_t frame_index)
{
    const std::size_t A = s.antennas, S = s.subcarriers;
    std::vector<std::complex<double>> sum = pc.constant;
    for (const auto &p : pc.modulated)
    {
        const auto r = path_response(s, p, t_s);
        for (std::size_t i = 0; i < r.size(); ++i)
            sum[i] += r[i];
    }

    std::mt19937_64 rng(mix_seed(noise_key, frame_index));
    std::normal_distribution<double> gauss(0.0, s.noise_sigma / std::numbers::sqrt2);

    CsiFrame frame(A, S);
    frame.boot_session = session.session_id;
    for (std::size_t a = 0; a < A; ++a)
    {
        const std::complex<double> rot = session.alpha * std::polar(1.0, session.common_phase_rad + s.antenna_offsets_rad[a]);
        for (std::size_t k = 0; k < S; ++k)
        {
            std::complex<double> v = rot * sum[a * S + k];
            if (s.noise_sigma > 0.0)
            {
                const double re = gauss(rng);
                const double im = gauss(rng);
                v += std::complex<double>(re, im);
            }
            frame.at(a, k) = Complex(float(v.real()), float(v.imag()));
        }
    }
    return frame;
}

std::uint64_t timestamp_for(std::size_t i, double sample_rate_hz)
{
    return std::uint64_t(std::llround(double(i) * 1e6 / sample_rate_hz));
}
} // namespace

CsiFrame render_frame(const ScenarioConfig &s, const BootSession &session, const OccupancyLabel &occupants,
                      double t_s, std::uint64_t frame_index)
{
    const auto pc = prepare(s, scenario_paths(s, occupants));
    const std::uint64_t key = mix_seed(mix_seed(mix_seed(s.seed, kNoiseStream), session.session_id), label_hash(occupants));
    CsiFrame f = render_prepared(s, session, pc, key, t_s, frame_index);
    f.timestamp_us = std::uint64_t(std::llround(t_s * 1e6));
    return f;
}

CsiRecording render_recording(const ScenarioConfig &s, const BootSession &session, const OccupancyLabel &occupants,
                              std::size_t n_frames, double sample_rate_hz, unsigned threads)
{
    if (n_frames < 1)
        throw std::invalid_argument("n_frames must be >= 1");
    if (!(sample_rate_hz > 0.0))
        throw std::invalid_argument("sample rate must be positive");

    const auto pc = prepare(s, scenario_paths(s, occupants));
    const std::uint64_t key = mix_seed(mix_seed(mix_seed(s.seed, kNoiseStream), session.session_id), label_hash(occupants));

    CsiRecording rec;
    rec.sample_rate_hz = sample_rate_hz;
    rec.center_freq_hz = s.center_freq_hz;
    rec.bandwidth_hz = s.bandwidth_hz;
    rec.grid = s.grid;
    rec.empty_antennas = s.antennas;
    rec.empty_subcarriers = s.subcarriers;
    rec.frames.resize(n_frames);
    rec.labels.assign(n_frames, occupants);

    auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < n_frames; i += step)
        {
            const double t = double(i) / sample_rate_hz;
            rec.frames[i] = render_prepared(s, session, pc, key, t, i);
            rec.frames[i].timestamp_us = timestamp_for(i, sample_rate_hz);
        }
    };

    if (threads <= 1)
    {
        work(0, 1);
    }
    else
    {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(work, t, threads);
        for (auto &th : pool)
            th.join();
    }
    return rec;
}

CsiRecording render_calibration_capture(const ScenarioConfig &s, const BootSession &session, std::size_t n_frames)
{
    if (n_frames < 1)
        throw std::invalid_argument("n_frames must be >= 1");
    PathComponent rig;
    rig.gain = {1.0, 0.0};
    rig.delay_s = kRigCableDelayS;
    rig.array_cosine = 0.0;

    ScenarioConfig local = s;
    local.antenna_spacing_m = 0.0;
    const auto pc = prepare(local, {rig});
    const std::uint64_t key = mix_seed(mix_seed(s.seed, kNoiseStream ^ 0x726967ULL), session.session_id);

    CsiRecording rec;
    rec.sample_rate_hz = s.sample_rate_hz;
    rec.center_freq_hz = s.center_freq_hz;
    rec.bandwidth_hz = s.bandwidth_hz;
    rec.grid = s.grid;
    rec.empty_antennas = s.antennas;
    rec.empty_subcarriers = s.subcarriers;
    rec.frames.reserve(n_frames);
    rec.labels.assign(n_frames, OccupancyLabel(s.grid.cell_count()));
    for (std::size_t i = 0; i < n_frames; ++i)
    {
        rec.frames.push_back(render_prepared(local, session, pc, key, double(i) / s.sample_rate_hz, i));
        rec.frames.back().timestamp_us = timestamp_for(i, s.sample_rate_hz);
    }
    return rec;
}

// ------------------------------------------------------------------------
// Key-value form
// ------------------------------------------------------------------------

static Vec3 to_vec3(const std::vector<double> &v, const std::string &key)
{
    if (v.size() != 3)
        throw ConfigError("key '" + key + "' needs exactly 3 values");
    return {v[0], v[1], v[2]};
}

ScenarioConfig scenario_from_config(const KeyValueConfig &c)
{
    ScenarioConfig s;
    s.seed = c.get_u64("scenario.seed", s.seed);
    s.antennas = c.get_u64("scenario.antennas", s.antennas);
    s.subcarriers = c.get_u64("scenario.subcarriers", s.subcarriers);
    s.sample_rate_hz = c.get_double("scenario.sample_rate_hz", s.sample_rate_hz);
    s.center_freq_hz = c.get_double("scenario.center_freq_hz", s.center_freq_hz);
    s.bandwidth_hz = c.get_double("scenario.bandwidth_hz", s.bandwidth_hz);
    s.antenna_spacing_m = c.get_double("scenario.antenna_spacing_m", s.antenna_spacing_m);
    s.noise_sigma = c.get_double("scenario.noise_sigma", s.noise_sigma);
    s.alpha_range.first = c.get_double("scenario.alpha_low", s.alpha_range.first);
    s.alpha_range.second = c.get_double("scenario.alpha_high", s.alpha_range.second);
    s.limb_freq_range_hz.first = c.get_double("scenario.limb_freq_low_hz", s.limb_freq_range_hz.first);
    s.limb_freq_range_hz.second = c.get_double("scenario.limb_freq_high_hz", s.limb_freq_range_hz.second);
    s.body_cross_section = c.get_double("scenario.body_cross_section", s.body_cross_section);
    s.limb_gain_ratio = c.get_double("scenario.limb_gain_ratio", s.limb_gain_ratio);
    s.body_height_m = c.get_double("scenario.body_height_m", s.body_height_m);
    s.max_occupants = c.get_u64("scenario.max_occupants", s.max_occupants);
    s.grid.rows = c.get_u64("scenario.grid.rows", s.grid.rows);
    s.grid.cols = c.get_u64("scenario.grid.cols", s.grid.cols);
    s.grid.spacing_m = c.get_double("scenario.grid.spacing_m", s.grid.spacing_m);
    if (c.has("scenario.grid.tx_pos"))
        s.grid.tx_pos = to_vec3(c.get_doubles("scenario.grid.tx_pos", {}), "scenario.grid.tx_pos");
    if (c.has("scenario.grid.rx_pos"))
        s.grid.rx_pos = to_vec3(c.get_doubles("scenario.grid.rx_pos", {}), "scenario.grid.rx_pos");

    if (c.has("scenario.antenna_offsets_rad"))
        s.antenna_offsets_rad = c.get_doubles("scenario.antenna_offsets_rad", {});
    else if (s.antennas != s.antenna_offsets_rad.size())
        s.antenna_offsets_rad.assign(s.antennas, 0.0);

    const std::uint64_t path_seed = c.get_u64("scenario.static_path_seed", s.seed);
    const std::size_t n_paths = c.get_u64("scenario.n_static_paths", 8);
    if (c.has("scenario.static_path.0.delay_s"))
    {
        for (std::size_t i = 0;; ++i)
        {
            const std::string base = "scenario.static_path." + std::to_string(i) + ".";
            if (!c.has(base + "delay_s"))
                break;
            PathComponent p;
            p.gain = {c.get_double(base + "gain_re", 1.0), c.get_double(base + "gain_im", 0.0)};
            p.delay_s = c.get_double(base + "delay_s", 0.0);
            p.array_cosine = c.get_double(base + "array_cosine", 0.0);
            s.static_paths.push_back(p);
        }
    }
    else
    {
        s.static_paths = synth_static_paths(path_seed, n_paths, s.grid);
    }

    try
    {
        validate(s);
    }
    catch (const std::invalid_argument &e)
    {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
    return s;
}

std::string scenario_to_text(const ScenarioConfig &s)
{
    std::ostringstream out;
    auto line = [&](const std::string &key, const std::string &value) { out << "scenario." << key << " = " << value << "\n"; };
    line("seed", std::to_string(s.seed));
    line("antennas", std::to_string(s.antennas));
    line("subcarriers", std::to_string(s.subcarriers));
    line("sample_rate_hz", format_double(s.sample_rate_hz));
    line("center_freq_hz", format_double(s.center_freq_hz));
    line("bandwidth_hz", format_double(s.bandwidth_hz));
    line("antenna_spacing_m", format_double(s.antenna_spacing_m));
    line("noise_sigma", format_double(s.noise_sigma));
    line("alpha_low", format_double(s.alpha_range.first));
    line("alpha_high", format_double(s.alpha_range.second));
    line("antenna_offsets_rad", format_doubles(s.antenna_offsets_rad));
    line("limb_freq_low_hz", format_double(s.limb_freq_range_hz.first));
    line("limb_freq_high_hz", format_double(s.limb_freq_range_hz.second));
    line("body_cross_section", format_double(s.body_cross_section));
    line("limb_gain_ratio", format_double(s.limb_gain_ratio));
    line("body_height_m", format_double(s.body_height_m));
    line("max_occupants", std::to_string(s.max_occupants));
    line("grid.rows", std::to_string(s.grid.rows));
    line("grid.cols", std::to_string(s.grid.cols));
    line("grid.spacing_m", format_double(s.grid.spacing_m));
    line("grid.tx_pos", format_doubles({s.grid.tx_pos.begin(), s.grid.tx_pos.end()}));
    line("grid.rx_pos", format_doubles({s.grid.rx_pos.begin(), s.grid.rx_pos.end()}));
    for (std::size_t i = 0; i < s.static_paths.size(); ++i)
    {
        const auto &p = s.static_paths[i];
        const std::string base = "static_path." + std::to_string(i) + ".";
        line(base + "gain_re", format_double(p.gain.real()));
        line(base + "gain_im", format_double(p.gain.imag()));
        line(base + "delay_s", format_double(p.delay_s));
        line(base + "array_cosine", format_double(p.array_cosine));
    }
    return out.str();
}

} // namespace csiloc
