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

#include <catch2/catch_amalgamated.hpp>

#include "csiloc/channel_sim.hpp"
#include "test_support.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <set>

using namespace csiloc;
using cd = std::complex<double>;

static cd as_cd(Complex v)
{
    return {double(v.real()), double(v.imag())};
}

// ================================================================================================
// Static paths
// ================================================================================================

TEST_CASE("synth_static_paths - one path is the line of sight")
{
    LocationGrid g;
    const auto p = synth_static_paths(4, 1, g);
    REQUIRE(p.size() == 1);
    CHECK(p[0].gain == cd(1.0, 0.0));
    CHECK(p[0].delay_s == Catch::Approx(8.0 / kSpeedOfLight).epsilon(1e-12));
    CHECK(p[0].delay_s * 1e9 == Catch::Approx(26.685).margin(0.005));
    CHECK_THROWS_AS(synth_static_paths(4, 0, g), std::invalid_argument);
}

TEST_CASE("synth_static_paths - scatterer delays, decay and determinism")
{
    LocationGrid g;
    const auto a = synth_static_paths(11, 40, g);
    const auto b = synth_static_paths(11, 40, g);
    CHECK(a == b);
    CHECK_FALSE(a == synth_static_paths(12, 40, g));
    const double los = los_delay_s(g);
    for (std::size_t i = 1; i < a.size(); ++i)
    {
        CHECK(a[i].delay_s >= los);
        CHECK(a[i].delay_s <= los + 100e-9);
        CHECK(std::abs(a[i].gain) <= 0.8 * std::exp(-(a[i].delay_s - los) / 25e-9) + 1e-15);
        CHECK(a[i].modulation_depth == 0.0);
    }
}

// ================================================================================================
// Body and limb paths
// ================================================================================================

TEST_CASE("body_path - on the baseline midpoint the delay equals the LOS delay")
{
    LocationGrid g;
    g.rows = 1;
    g.cols = 1;
    g.spacing_m = 1.0;
    g.tx_pos = {-3.5, 0.5, 1.0};
    g.rx_pos = {4.5, 0.5, 1.0};
    const PathComponent p = body_path(0, g, 0.5, 1.0);
    CHECK(p.delay_s == Catch::Approx(los_delay_s(g)).epsilon(1e-14));
    CHECK(p.modulation_freq_hz == 0.0);
}

TEST_CASE("body_path - hand geometry")
{
    LocationGrid g;
    g.rows = 1;
    g.cols = 1;
    g.spacing_m = 2.0;
    // cell centre (1, 1, 1); tx 3 m away along x, rx 5 m away along x.
    g.tx_pos = {-2.0, 1.0, 1.0};
    g.rx_pos = {6.0, 1.0, 1.0};
    const PathComponent p = body_path(0, g, 0.5, 1.0);
    CHECK(p.delay_s == Catch::Approx(8.0 / kSpeedOfLight).epsilon(1e-14));
    CHECK(std::abs(p.gain) == Catch::Approx(0.5 * 8.0 / 15.0));

    // Off-baseline cell.
    LocationGrid h = g;
    h.tx_pos = {-2.0, 5.0, 1.0};
    h.rx_pos = {4.0, 9.0, 1.0};
    const PathComponent q = body_path(0, h, 1.0, 1.0);
    CHECK(q.delay_s == Catch::Approx(std::hypot(3.0, 4.0) / kSpeedOfLight + std::hypot(3.0, 8.0) / kSpeedOfLight));
    CHECK_THROWS_AS(body_path(1, g, 0.5), std::out_of_range);
}

TEST_CASE("body_path - distinct cells give distinct (delay, gain) pairs")
{
    LocationGrid g;
    std::set<std::pair<double, double>> seen;
    for (std::size_t c = 0; c < g.cell_count(); ++c)
    {
        const PathComponent p = body_path(c, g, 0.5);
        CHECK(seen.insert({p.delay_s, std::abs(p.gain)}).second);
    }
}

TEST_CASE("limb_path - fixed frequency range and depth")
{
    ScenarioConfig s = csiloc::test::default_scenario();
    s.limb_freq_range_hz = {1.9, 1.9};
    std::mt19937_64 rng(3);
    for (std::size_t c = 0; c < 12; ++c)
    {
        const PathComponent p = limb_path(s, c, rng);
        CHECK(p.modulation_freq_hz == 1.9);
        CHECK(p.modulation_depth > 0.0);
        CHECK(p.modulation_depth <= 1.0);
        const PathComponent b = body_path(c, s.grid, s.body_cross_section);
        CHECK(p.delay_s == b.delay_s);
        CHECK(std::abs(p.gain) == Catch::Approx(s.limb_gain_ratio * std::abs(b.gain)));
    }
}

TEST_CASE("limb_path - zero depth is time-constant")
{
    ScenarioConfig s = csiloc::test::default_scenario();
    std::mt19937_64 rng(3);
    PathComponent p = limb_path(s, 4, rng);
    p.modulation_depth = 0.0;
    CHECK(path_response(s, p, 0.0) == path_response(s, p, 0.37));
}

TEST_CASE("limb_path - 1.9 Hz modulation peaks at the 1.9 Hz bin")
{
    ScenarioConfig s = csiloc::test::default_scenario();
    s.limb_freq_range_hz = {1.9, 1.9};
    const PathComponent p = scenario_limb_path(s, 6);
    const std::size_t n = 550;
    std::vector<cd> series(n);
    for (std::size_t i = 0; i < n; ++i)
        series[i] = path_response(s, p, double(i) / 50.0)[17];
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 1; k < n / 2; ++k)
    {
        cd acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += series[i] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * i) / double(n));
        if (std::abs(acc) > best_mag)
        {
            best_mag = std::abs(acc);
            best = k;
        }
    }
    CHECK(best == std::size_t(std::lround(1.9 * double(n) / 50.0)));
}

// ================================================================================================
// Rendering
// ================================================================================================

TEST_CASE("render_frame - flat channel is exactly 1")
{
    ScenarioConfig s = csiloc::test::flat_scenario();
    BootSession b{0, 1.0, 0.0};
    const CsiFrame f = render_frame(s, b, OccupancyLabel(12), 0.3);
    for (const auto &v : f.values)
        CHECK(v == Complex(1.0f, 0.0f));
}

TEST_CASE("render_frame - empty room is time-constant and equals alpha e^{j phi} H_s")
{
    ScenarioConfig s = csiloc::test::default_scenario(8);
    s.noise_sigma = 0.0;
    const BootSession b = draw_boot_session(s, 2);
    const CsiRecording rec = render_recording(s, b, OccupancyLabel(12), 40, 50.0);
    for (const auto &f : rec.frames)
        CHECK(f.values == rec.frames.front().values);

    std::vector<cd> hs(s.antennas * s.subcarriers);
    for (const auto &p : s.static_paths)
    {
        const auto r = path_response(s, p, 0.0);
        for (std::size_t i = 0; i < hs.size(); ++i)
            hs[i] += r[i];
    }
    for (std::size_t a = 0; a < s.antennas; ++a)
        for (std::size_t k = 0; k < s.subcarriers; ++k)
        {
            const cd expect = b.alpha * std::polar(1.0, b.common_phase_rad + s.antenna_offsets_rad[a]) * hs[a * s.subcarriers + k];
            CHECK(std::abs(as_cd(rec.frames[0].at(a, k)) - expect) <= 1e-6 * (1.0 + std::abs(expect)));
        }
}

TEST_CASE("render_frame - an occupant adds exactly its body and limb terms")
{
    ScenarioConfig s = csiloc::test::default_scenario(9);
    s.noise_sigma = 0.0;
    const BootSession b = draw_boot_session(s, 0);
    const double t = 0.46;
    const CsiFrame empty = render_frame(s, b, OccupancyLabel(12), t);
    const CsiFrame one = render_frame(s, b, OccupancyLabel(12, {7}), t);
    const auto body = path_response(s, body_path(7, s.grid, s.body_cross_section, s.body_height_m), t);
    const auto limb = path_response(s, scenario_limb_path(s, 7), t);
    for (std::size_t a = 0; a < s.antennas; ++a)
        for (std::size_t k = 0; k < s.subcarriers; ++k)
        {
            const std::size_t i = a * s.subcarriers + k;
            const cd rot = b.alpha * std::polar(1.0, b.common_phase_rad + s.antenna_offsets_rad[a]);
            const cd diff = as_cd(one.values[i]) - as_cd(empty.values[i]);
            CHECK(std::abs(diff - rot * (body[i] + limb[i])) <= 1e-5);
        }
}

TEST_CASE("render - superposition of occupants")
{
    ScenarioConfig s = csiloc::test::default_scenario(10);
    s.noise_sigma = 0.0;
    const BootSession b = draw_boot_session(s, 0);
    for (double t : {0.0, 0.13, 1.7})
    {
        const CsiFrame e = render_frame(s, b, OccupancyLabel(12), t);
        const CsiFrame fa = render_frame(s, b, OccupancyLabel(12, {1, 4}), t);
        const CsiFrame fb = render_frame(s, b, OccupancyLabel(12, {9}), t);
        const CsiFrame fab = render_frame(s, b, OccupancyLabel(12, {1, 4, 9}), t);
        for (std::size_t i = 0; i < e.values.size(); ++i)
        {
            const cd lhs = as_cd(fab.values[i]) - as_cd(e.values[i]);
            const cd rhs = as_cd(fa.values[i]) - as_cd(e.values[i]) + as_cd(fb.values[i]) - as_cd(e.values[i]);
            CHECK(std::abs(lhs - rhs) <= 1e-5);
        }
    }
}

TEST_CASE("render - amplitude scales with alpha, offsets only rotate phase")
{
    ScenarioConfig s = csiloc::test::default_scenario(11);
    s.noise_sigma = 0.0;
    const OccupancyLabel occ(12, {2, 5});
    const CsiFrame f1 = render_frame(s, BootSession{0, 1.0, 0.4}, occ, 0.2);
    const CsiFrame f2 = render_frame(s, BootSession{0, 2.0, 0.4}, occ, 0.2);
    ScenarioConfig z = s;
    z.antenna_offsets_rad.assign(s.antennas, 0.0);
    const CsiFrame f3 = render_frame(z, BootSession{0, 1.0, 0.4}, occ, 0.2);
    for (std::size_t i = 0; i < f1.values.size(); ++i)
    {
        CHECK(std::abs(f2.values[i]) == Catch::Approx(2.0 * std::abs(f1.values[i])).epsilon(1e-6));
        CHECK(std::abs(f3.values[i]) == Catch::Approx(std::abs(f1.values[i])).epsilon(1e-6));
    }
}

TEST_CASE("render_recording - timing, determinism, threads")
{
    ScenarioConfig s = csiloc::test::default_scenario(12);
    const BootSession b = draw_boot_session(s, 1);
    const OccupancyLabel occ(12, {0, 11});
    const CsiRecording r = render_recording(s, b, occ, 550, 50.0);
    CHECK(r.frames.size() == 550);
    CHECK(r.frames.back().timestamp_us - r.frames.front().timestamp_us == 10980000);
    CHECK(r.frames.back().timestamp_us + 20000 == 11000000);
    CHECK(r == render_recording(s, b, occ, 550, 50.0));
    CHECK(r == render_recording(s, b, occ, 550, 50.0, 3));
    CHECK_NOTHROW(validate(r));
    const CsiRecording one = render_recording(s, b, occ, 1, 50.0);
    CHECK(one.frames.size() == 1);
    CHECK(one.frames[0] == r.frames[0]);
    CHECK_FALSE(r == render_recording(s, draw_boot_session(s, 2), occ, 550, 50.0));
}

TEST_CASE("draw_boot_session - alpha range and phase interval")
{
    ScenarioConfig s = csiloc::test::default_scenario(13);
    for (std::uint32_t i = 0; i < 50; ++i)
    {
        const BootSession b = draw_boot_session(s, i);
        CHECK(b.alpha >= s.alpha_range.first);
        CHECK(b.alpha <= s.alpha_range.second);
        CHECK(b.common_phase_rad >= -std::numbers::pi);
        CHECK(b.common_phase_rad < std::numbers::pi);
    }
}

// ================================================================================================
// Calibration rig
// ================================================================================================

TEST_CASE("render_calibration_capture - noiseless differences equal the offsets")
{
    ScenarioConfig s = csiloc::test::default_scenario(14);
    s.noise_sigma = 0.0;
    const CsiRecording cap = render_calibration_capture(s, draw_boot_session(s, 0), 5);
    for (const auto &f : cap.frames)
        for (std::size_t a = 1; a < s.antennas; ++a)
            for (std::size_t k = 0; k < s.subcarriers; ++k)
            {
                const double d = std::arg(as_cd(f.at(a, k)) * std::conj(as_cd(f.at(0, k))));
                CHECK(d == Catch::Approx(s.antenna_offsets_rad[a]).margin(1e-6));
            }

    s.antenna_offsets_rad.assign(s.antennas, 0.0);
    const CsiRecording zero = render_calibration_capture(s, draw_boot_session(s, 0), 3);
    for (const auto &f : zero.frames)
        for (std::size_t a = 1; a < s.antennas; ++a)
            for (std::size_t k = 0; k < s.subcarriers; ++k)
                CHECK(std::abs(std::arg(as_cd(f.at(a, k)) * std::conj(as_cd(f.at(0, k))))) <= 1e-6);
}

// ================================================================================================
// Configuration
// ================================================================================================

TEST_CASE("scenario config - text roundtrip and validation")
{
    ScenarioConfig s = csiloc::test::default_scenario(15);
    s.noise_sigma = 0.25;
    std::istringstream in(scenario_to_text(s));
    const KeyValueConfig c = KeyValueConfig::parse(in);
    const ScenarioConfig back = scenario_from_config(c);
    CHECK(back.static_paths == s.static_paths);
    CHECK(back.noise_sigma == s.noise_sigma);
    CHECK(back.antenna_offsets_rad == s.antenna_offsets_rad);
    CHECK(back.grid == s.grid);

    KeyValueConfig bad;
    bad.set("scenario.noise_sigma", "-1");
    CHECK_THROWS_AS(scenario_from_config(bad), ConfigError);
    KeyValueConfig offsets;
    offsets.set("scenario.antenna_offsets_rad", "0.1,0,0,0");
    CHECK_THROWS_AS(scenario_from_config(offsets), ConfigError);
}
