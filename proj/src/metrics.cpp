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

#include "csiloc/training.hpp"

#include <stdexcept>

namespace csiloc
{

namespace
{
void check_pairs(std::span<const OccupancyLabel> p, std::span<const OccupancyLabel> t, const char *what)
{
    if (p.size() != t.size())
        throw std::invalid_argument(std::string(what) + ": " + std::to_string(p.size()) + " predictions for " +
                                    std::to_string(t.size()) + " truths");
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i].cells() != t[i].cells())
            throw std::invalid_argument(std::string(what) + ": grid size mismatch at frame " + std::to_string(i));
}

struct Confusion
{
    std::vector<std::size_t> tp, fp, fn;
};

Confusion confusion(std::span<const OccupancyLabel> p, std::span<const OccupancyLabel> t)
{
    const std::size_t cells = t.empty() ? 0 : t.front().cells();
    Confusion c{std::vector<std::size_t>(cells), std::vector<std::size_t>(cells), std::vector<std::size_t>(cells)};
    for (std::size_t n = 0; n < t.size(); ++n)
    {
        if (t[n].cells() != cells)
            throw std::invalid_argument("metrics: frames use different grid sizes");
        for (std::size_t i = 0; i < cells; ++i)
        {
            const bool pred = p[n].test(i), truth = t[n].test(i);
            c.tp[i] += pred && truth;
            c.fp[i] += pred && !truth;
            c.fn[i] += !pred && truth;
        }
    }
    return c;
}
} // namespace

OccupancyLabel predict_occupancy(const Vector &scores, double gamma)
{
    OccupancyLabel label(std::size_t(scores.size()));
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        if (scores[i] > gamma)
            label.set(std::size_t(i));
    return label;
}

std::vector<OccupancyLabel> predict_occupancy(const Matrix &scores, double gamma)
{
    std::vector<OccupancyLabel> out;
    out.reserve(std::size_t(scores.rows()));
    for (Eigen::Index r = 0; r < scores.rows(); ++r)
        out.push_back(predict_occupancy(Vector(scores.row(r).transpose()), gamma));
    return out;
}

double subacc(std::span<const OccupancyLabel> predictions, std::span<const OccupancyLabel> truths)
{
    check_pairs(predictions, truths, "subacc");
    if (truths.empty())
        throw std::invalid_argument("subacc: empty input");
    std::size_t hits = 0;
    for (std::size_t n = 0; n < truths.size(); ++n)
        hits += predictions[n] == truths[n];
    return double(hits) / double(truths.size());
}

double macro_f1(std::span<const OccupancyLabel> predictions, std::span<const OccupancyLabel> truths)
{
    check_pairs(predictions, truths, "macro_f1");
    if (truths.empty())
        throw std::invalid_argument("macro_f1: empty input");
    const Confusion c = confusion(predictions, truths);
    const std::size_t cells = c.tp.size();
    if (cells == 0)
        return 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < cells; ++i)
    {
        const std::size_t denom = 2 * c.tp[i] + c.fp[i] + c.fn[i];
        sum += denom == 0 ? 1.0 : double(2 * c.tp[i]) / double(denom);
    }
    return sum / double(cells);
}

double argmax_accuracy(const Matrix &scores, std::span<const OccupancyLabel> truths, double gamma)
{
    if (std::size_t(scores.rows()) != truths.size())
        throw std::invalid_argument("argmax_accuracy: score rows do not match the truths");
    if (truths.empty())
        throw std::invalid_argument("argmax_accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t n = 0; n < truths.size(); ++n)
    {
        if (std::size_t(scores.cols()) != truths[n].cells())
            throw std::invalid_argument("argmax_accuracy: score width does not match the grid");
        Eigen::Index best = 0;
        const double top = scores.row(Eigen::Index(n)).maxCoeff(&best);
        if (truths[n].count() == 0)
            hits += !(top > gamma);
        else
            hits += truths[n].test(std::size_t(best));
    }
    return double(hits) / double(truths.size());
}

CellRates per_cell_rates(std::span<const OccupancyLabel> predictions, std::span<const OccupancyLabel> truths)
{
    check_pairs(predictions, truths, "per_cell_rates");
    const Confusion c = confusion(predictions, truths);
    CellRates r;
    for (std::size_t i = 0; i < c.tp.size(); ++i)
    {
        const std::size_t pp = c.tp[i] + c.fp[i], ap = c.tp[i] + c.fn[i];
        r.precision.push_back(pp == 0 ? 1.0 : double(c.tp[i]) / double(pp));
        r.recall.push_back(ap == 0 ? 1.0 : double(c.tp[i]) / double(ap));
    }
    return r;
}

} // namespace csiloc
