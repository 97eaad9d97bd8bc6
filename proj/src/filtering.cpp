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

#include "csiloc/filtering.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>

namespace csiloc
{

void validate(const FilterConfig &c, double sample_rate_hz)
{
    if (!(c.cutoff_hz > 0.0) || !(c.cutoff_hz < sample_rate_hz / 2.0))
        throw FilterError("cutoff must lie in (0, sample_rate / 2)");
    if (c.hampel_window < 3 || c.hampel_window % 2 == 0)
        throw FilterError("hampel window must be odd and >= 3");
    if (!(c.hampel_nsigma > 0.0))
        throw FilterError("hampel nsigma must be positive");
}

FilterConfig filter_config_from(const KeyValueConfig &c)
{
    FilterConfig f;
    f.cutoff_hz = c.get_double("filter.cutoff_hz", f.cutoff_hz);
    f.hampel_window = c.get_u64("filter.hampel_window", f.hampel_window);
    f.hampel_nsigma = c.get_double("filter.hampel_nsigma", f.hampel_nsigma);
    return f;
}

namespace
{
// In-place complex DFT of a fixed length. FFTW_ESTIMATE keeps plans deterministic.
class Dft
{
public:
    explicit Dft(std::size_t n) : n_(n)
    {
        buf_ = static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * n));
        if (!buf_)
            throw std::bad_alloc();
        forward_ = fftw_plan_dft_1d(int(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_1d(int(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Dft()
    {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(buf_);
    }
    Dft(const Dft &) = delete;
    Dft &operator=(const Dft &) = delete;

    std::complex<double> *data() { return reinterpret_cast<std::complex<double> *>(buf_); }
    void forward() { fftw_execute(forward_); }
    void backward() { fftw_execute(backward_); }
    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    fftw_complex *buf_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

// Bins with 0 < |f| <= cutoff.
std::vector<std::size_t> stop_bins(std::size_t n, double sample_rate_hz, double cutoff_hz)
{
    std::vector<std::size_t> bins;
    for (std::size_t b = 1; b < n; ++b)
    {
        const double f = b <= n / 2 ? double(b) * sample_rate_hz / double(n)
                                    : (double(n) - double(b)) * sample_rate_hz / double(n);
        if (f <= cutoff_hz)
            bins.push_back(b);
    }
    return bins;
}

double apply_stop_band(Dft &dft, std::span<std::complex<double>> series, const std::vector<std::size_t> &bins)
{
    const std::size_t n = dft.size();
    std::copy(series.begin(), series.end(), dft.data());
    dft.forward();
    double removed = 0.0;
    for (auto b : bins)
    {
        removed += std::norm(dft.data()[b]);
        dft.data()[b] = 0.0;
    }
    dft.backward();
    const double scale = 1.0 / double(n);
    for (std::size_t i = 0; i < n; ++i)
        series[i] = dft.data()[i] * scale;
    return removed / double(n);
}

double median_of(std::vector<double> &v)
{
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(mid), v.end());
    const double upper = v[mid];
    if (n % 2 == 1)
        return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + std::ptrdiff_t(mid));
    return 0.5 * (lower + upper);
}

void check_recording(const CsiRecording &rec, std::size_t min_frames)
{
    if (rec.frames.size() < min_frames)
        throw FilterError("recording too short for filtering: " + std::to_string(rec.frames.size()) +
                          " frames, need " + std::to_string(min_frames));
}
} // namespace

double suppress_band(std::span<std::complex<double>> series, double sample_rate_hz, double cutoff_hz)
{
    if (series.empty())
        return 0.0;
    Dft dft(series.size());
    return apply_stop_band(dft, series, stop_bins(series.size(), sample_rate_hz, cutoff_hz));
}

std::vector<std::size_t> hampel(std::span<double> series, std::size_t window, double nsigma)
{
    if (window < 3 || window % 2 == 0)
        throw FilterError("hampel window must be odd and >= 3");
    const std::size_t n = series.size();
    const std::size_t half = window / 2;
    const std::vector<double> input(series.begin(), series.end());
    std::vector<std::size_t> replaced;
    std::vector<double> win, dev;
    for (std::size_t i = 0; i < n; ++i)
    {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        win.assign(input.begin() + std::ptrdiff_t(lo), input.begin() + std::ptrdiff_t(hi + 1));
        const double med = median_of(win);
        dev.resize(hi - lo + 1);
        for (std::size_t j = lo; j <= hi; ++j)
            dev[j - lo] = std::abs(input[j] - med);
        const double mad = median_of(dev);
        if (std::abs(input[i] - med) > nsigma * kMadToSigma * mad)
        {
            series[i] = med;
            replaced.push_back(i);
        }
    }
    return replaced;
}

CsiRecording suppress_activity_band(const CsiRecording &rec, const FilterConfig &config, BandSuppressionStats *stats)
{
    check_recording(rec, 4);
    validate(config, rec.sample_rate_hz);
    if (!is_uniformly_sampled(rec, 0, rec.frames.size()))
        throw FilterError("non-uniform sampling: timestamps deviate from 1/sample_rate by more than 1%");

    const std::size_t T = rec.frames.size();
    const std::size_t A = rec.antennas(), S = rec.subcarriers();
    Dft dft(T);
    const auto bins = stop_bins(T, rec.sample_rate_hz, config.cutoff_hz);

    CsiRecording out = rec;
    std::vector<std::complex<double>> series(T);
    BandSuppressionStats local;
    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t k = 0; k < S; ++k)
        {
            for (std::size_t t = 0; t < T; ++t)
            {
                series[t] = std::complex<double>(rec.frames[t].at(a, k));
                local.input_energy += std::norm(series[t]);
            }
            local.removed_energy += apply_stop_band(dft, series, bins);
            for (std::size_t t = 0; t < T; ++t)
                out.frames[t].at(a, k) = Complex(float(series[t].real()), float(series[t].imag()));
        }
    if (stats)
        *stats = local;
    return out;
}

CsiRecording hampel_despike(const CsiRecording &rec, const FilterConfig &config, std::size_t *replaced)
{
    validate(config, rec.sample_rate_hz);
    check_recording(rec, config.hampel_window);

    const std::size_t T = rec.frames.size();
    const std::size_t A = rec.antennas(), S = rec.subcarriers();
    CsiRecording out = rec;
    std::vector<double> re(T), im(T);
    std::size_t count = 0;
    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t k = 0; k < S; ++k)
        {
            for (std::size_t t = 0; t < T; ++t)
            {
                re[t] = rec.frames[t].at(a, k).real();
                im[t] = rec.frames[t].at(a, k).imag();
            }
            count += hampel(re, config.hampel_window, config.hampel_nsigma).size();
            count += hampel(im, config.hampel_window, config.hampel_nsigma).size();
            for (std::size_t t = 0; t < T; ++t)
                out.frames[t].at(a, k) = Complex(float(re[t]), float(im[t]));
        }
    if (replaced)
        *replaced = count;
    return out;
}

} // namespace csiloc
