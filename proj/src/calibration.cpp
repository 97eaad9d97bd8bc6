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

#include "csiloc/calibration.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace csiloc
{

CalibrationProfile CalibrationProfile::identity(std::size_t antennas)
{
    CalibrationProfile p;
    p.delta_theta_rad.assign(antennas, 0.0);
    p.kappa.assign(antennas, kMaxKappa);
    p.resultant_length.assign(antennas, 1.0);
    if (antennas > 0)
        p.kappa[0] = std::numeric_limits<double>::infinity();
    return p;
}

double wrap_angle(double rad)
{
    constexpr double pi = std::numbers::pi;
    double w = std::fmod(rad + pi, 2.0 * pi);
    if (w < 0.0)
        w += 2.0 * pi;
    w -= pi;
    // fmod rounding can land exactly on +pi
    return w >= pi ? -pi : w;
}

CircularSummary circular_summary(std::span<const double> angles)
{
    if (angles.empty())
        throw std::invalid_argument("circular_summary of empty set");
    double c = 0.0, s = 0.0;
    for (double a : angles)
    {
        c += std::cos(a);
        s += std::sin(a);
    }
    const double n = double(angles.size());
    return {wrap_angle(std::atan2(s, c)), std::min(1.0, std::hypot(c, s) / n)};
}

double estimate_kappa(double R)
{
    if (R < 0.0 || R > 1.0 || std::isnan(R))
        throw std::invalid_argument("resultant length outside [0, 1]");
    const double denom = 1.0 - R * R;
    if (denom <= R * (2.0 - R * R) / kMaxKappa)
        return kMaxKappa;
    return R * (2.0 - R * R) / denom;
}

CalibrationProfile estimate_phase_offsets(const CsiRecording &capture)
{
    if (capture.frames.size() < kMinCalibrationFrames)
        throw CalibrationError("capture too short: " + std::to_string(capture.frames.size()) +
                               " frames, need at least " + std::to_string(kMinCalibrationFrames));
    const std::size_t A = capture.antennas();
    const std::size_t S = capture.subcarriers();

    CalibrationProfile profile = CalibrationProfile::identity(A);
    for (std::size_t a = 1; a < A; ++a)
    {
        // Sum of unit phasors exp(j (angle(v_a) - angle(v_0))).
        double c = 0.0, s = 0.0;
        std::size_t n = 0;
        for (const auto &f : capture.frames)
            for (std::size_t k = 0; k < S; ++k)
            {
                const std::complex<double> ref(f.at(0, k));
                const std::complex<double> v(f.at(a, k));
                const std::complex<double> d = v * std::conj(ref);
                const double mag = std::abs(d);
                if (mag == 0.0)
                    continue;
                c += d.real() / mag;
                s += d.imag() / mag;
                ++n;
            }
        if (n == 0)
            throw CalibrationError("degenerate capture: antenna " + std::to_string(a) + " has zero amplitude");

        const double mu = std::atan2(s, c);
        const double R = std::min(1.0, std::hypot(c, s) / double(n));
        profile.delta_theta_rad[a] = wrap_angle(-mu);
        profile.resultant_length[a] = R;
        profile.kappa[a] = estimate_kappa(R);
    }
    return profile;
}

CsiFrame compensate(const CsiFrame &frame, const CalibrationProfile &profile)
{
    if (profile.antennas() != frame.antennas)
        throw std::invalid_argument("calibration profile has " + std::to_string(profile.antennas()) +
                                    " antennas, frame has " + std::to_string(frame.antennas));
    CsiFrame out = frame;
    for (std::size_t a = 0; a < frame.antennas; ++a)
    {
        if (profile.delta_theta_rad[a] == 0.0)
            continue;
        const std::complex<double> rot = std::polar(1.0, profile.delta_theta_rad[a]);
        for (std::size_t k = 0; k < frame.subcarriers; ++k)
        {
            const std::complex<double> v = std::complex<double>(frame.at(a, k)) * rot;
            out.at(a, k) = Complex(float(v.real()), float(v.imag()));
        }
    }
    return out;
}

CsiFrame normalize_amplitude(const CsiFrame &frame)
{
    CsiFrame out = frame;
    for (std::size_t a = 0; a < frame.antennas; ++a)
    {
        double mean = 0.0;
        for (std::size_t k = 0; k < frame.subcarriers; ++k)
            mean += std::abs(std::complex<double>(frame.at(a, k)));
        mean /= double(frame.subcarriers);
        if (!(mean > 0.0))
            throw std::invalid_argument("antenna " + std::to_string(a) + " has zero mean amplitude");
        for (std::size_t k = 0; k < frame.subcarriers; ++k)
        {
            const std::complex<double> v = std::complex<double>(frame.at(a, k)) / mean;
            out.at(a, k) = Complex(float(v.real()), float(v.imag()));
        }
    }
    return out;
}

// ------------------------------------------------------------------------
// Serialisation
// ------------------------------------------------------------------------

std::string profile_to_text(const CalibrationProfile &p)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < p.antennas(); ++i)
    {
        out << "antenna." << i << ".delta_theta_rad = " << format_double(p.delta_theta_rad[i]) << "\n";
        out << "antenna." << i << ".kappa = " << format_double(p.kappa[i]) << "\n";
    }
    return out.str();
}

CalibrationProfile profile_from_config(const KeyValueConfig &c)
{
    CalibrationProfile p;
    for (std::size_t i = 0;; ++i)
    {
        const std::string base = "antenna." + std::to_string(i) + ".";
        if (!c.has(base + "delta_theta_rad"))
            break;
        p.delta_theta_rad.push_back(c.get_double(base + "delta_theta_rad", 0.0));
        p.kappa.push_back(c.get_double(base + "kappa", kMaxKappa));
        p.resultant_length.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    c.reject_unused();
    if (p.antennas() == 0)
        throw ConfigError("calibration profile lists no antennas");
    for (double d : p.delta_theta_rad)
        if (!std::isfinite(d))
            throw ConfigError("calibration profile has a non-finite offset");
    return p;
}

CalibrationProfile load_profile(const std::filesystem::path &path)
{
    return profile_from_config(KeyValueConfig::load(path));
}

void save_profile(const CalibrationProfile &profile, const std::filesystem::path &path)
{
    std::ofstream out(path, std::ios::trunc);
    out << profile_to_text(profile);
    if (!out)
        throw std::runtime_error("cannot write calibration profile to " + path.string());
}

} // namespace csiloc
