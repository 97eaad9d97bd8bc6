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

#include "commands.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace csiloc::cli
{

using ojson = nlohmann::ordered_json;

namespace
{
ojson number_or_null(double v)
{
    return std::isfinite(v) ? ojson(v) : ojson(nullptr);
}

std::string csv_number(double v)
{
    return std::isnan(v) ? "" : format_double(v);
}

std::string px(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string &s)
{
    std::string out;
    for (char c : s)
    {
        switch (c)
        {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string escape_csv(const std::string &s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

const char *kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

const char *color(std::size_t i)
{
    return kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
}

// Epoch with the highest validation SubACC (first on ties).
const EpochReport *best_epoch(const ReportSeries &s)
{
    const EpochReport *best = nullptr;
    for (const auto &e : s.epochs)
        if (!std::isnan(e.val_subacc) && (!best || e.val_subacc > best->val_subacc))
            best = &e;
    return best;
}

constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 170, kTop = 40, kBottom = 50;

std::string svg_frame(const std::string &title, const std::string &xlabel, const std::string &ylabel)
{
    std::ostringstream o;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << px(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
      << "</text>\n";
    for (int i = 0; i <= 5; ++i)
    {
        const double v = i / 5.0, y = kTop + ph * (1.0 - v);
        o << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(y) << "\" x2=\"" << px(kLeft + pw) << "\" y2=\"" << px(y)
          << "\" stroke=\"#dddddd\"/>\n";
        o << "<text x=\"" << px(kLeft - 6) << "\" y=\"" << px(y + 4) << "\" text-anchor=\"end\">" << px(v).substr(0, 3)
          << "</text>\n";
    }
    o << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(pw) << "\" height=\"" << px(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << px(kLeft + pw / 2) << "\" y=\"" << px(kHeight - 12) << "\" text-anchor=\"middle\">"
      << escape_xml(xlabel) << "</text>\n";
    o << "<text x=\"16\" y=\"" << px(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << px(kTop + ph / 2) << ")\">" << escape_xml(ylabel) << "</text>\n";
    return o.str();
}

std::string legend(const std::vector<ReportSeries> &series)
{
    std::ostringstream o;
    const double x = kWidth - kRight + 15;
    for (std::size_t i = 0; i < series.size(); ++i)
    {
        const double y = kTop + 10 + 20.0 * double(i);
        o << "<rect x=\"" << px(x) << "\" y=\"" << px(y - 9) << "\" width=\"12\" height=\"12\" fill=\"" << color(i)
          << "\"/>\n";
        o << "<text x=\"" << px(x + 18) << "\" y=\"" << px(y + 1) << "\">" << escape_xml(series[i].name) << "</text>\n";
    }
    return o.str();
}

std::string curves_svg(const std::vector<ReportSeries> &series)
{
    std::size_t max_epoch = 1;
    for (const auto &s : series)
        for (const auto &e : s.epochs)
            max_epoch = std::max(max_epoch, e.epoch);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto xpos = [&](std::size_t epoch) {
        return max_epoch <= 1 ? kLeft + pw / 2 : kLeft + pw * double(epoch - 1) / double(max_epoch - 1);
    };
    std::ostringstream o;
    o << svg_frame("Validation SubACC per epoch", "epoch", "val_subacc");
    o << "<text x=\"" << px(kLeft) << "\" y=\"" << px(kHeight - kBottom + 16) << "\" text-anchor=\"middle\">1</text>\n";
    o << "<text x=\"" << px(kLeft + pw) << "\" y=\"" << px(kHeight - kBottom + 16) << "\" text-anchor=\"middle\">"
      << max_epoch << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i)
    {
        std::string points;
        for (const auto &e : series[i].epochs)
        {
            if (std::isnan(e.val_subacc))
                continue;
            const double y = kTop + ph * (1.0 - std::clamp(e.val_subacc, 0.0, 1.0));
            points += (points.empty() ? "" : " ") + px(xpos(e.epoch)) + "," + px(y);
            o << "<circle cx=\"" << px(xpos(e.epoch)) << "\" cy=\"" << px(y) << "\" r=\"2.5\" fill=\"" << color(i)
              << "\"/>\n";
        }
        if (!points.empty())
            o << "<polyline points=\"" << points << "\" fill=\"none\" stroke=\"" << color(i)
              << "\" stroke-width=\"2\"/>\n";
    }
    o << legend(series) << "</svg>\n";
    return o.str();
}

std::string bars_svg(const std::vector<ReportSeries> &series)
{
    const char *metrics[] = {"subacc", "macro_f1", "accuracy"};
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    const double group_w = pw / 3.0, bar_w = group_w * 0.8 / double(series.size());
    std::ostringstream o;
    o << svg_frame("Best-epoch validation metrics", "metric", "value");
    for (std::size_t m = 0; m < 3; ++m)
    {
        const double gx = kLeft + group_w * double(m) + group_w * 0.1;
        o << "<text x=\"" << px(kLeft + group_w * (double(m) + 0.5)) << "\" y=\"" << px(kHeight - kBottom + 16)
          << "\" text-anchor=\"middle\">" << metrics[m] << "</text>\n";
        for (std::size_t i = 0; i < series.size(); ++i)
        {
            const EpochReport *b = best_epoch(series[i]);
            double v = 0.0;
            if (b)
                v = m == 0 ? b->val_subacc : m == 1 ? b->val_macro_f1 : b->val_accuracy;
            if (std::isnan(v))
                v = 0.0;
            v = std::clamp(v, 0.0, 1.0);
            const double x = gx + bar_w * double(i), h = ph * v;
            o << "<rect x=\"" << px(x) << "\" y=\"" << px(kTop + ph - h) << "\" width=\"" << px(bar_w * 0.9)
              << "\" height=\"" << px(h) << "\" fill=\"" << color(i) << "\"/>\n";
            o << "<text x=\"" << px(x + bar_w * 0.45) << "\" y=\"" << px(kTop + ph - h - 4)
              << "\" text-anchor=\"middle\" font-size=\"9\">" << px(v).substr(0, 4) << "</text>\n";
        }
    }
    o << legend(series) << "</svg>\n";
    return o.str();
}
} // namespace

std::string epoch_json(const EpochReport &r)
{
    ojson j;
    j["epoch"] = r.epoch;
    j["train_loss"] = number_or_null(r.train_loss);
    j["val_subacc"] = number_or_null(r.val_subacc);
    j["val_macro_f1"] = number_or_null(r.val_macro_f1);
    j["val_accuracy"] = number_or_null(r.val_accuracy);
    return j.dump();
}

std::string eval_json(const EvalReport &r)
{
    ojson j;
    j["frames"] = r.frames;
    j["subacc"] = number_or_null(r.subacc);
    j["macro_f1"] = number_or_null(r.macro_f1);
    j["accuracy"] = number_or_null(r.accuracy);
    j["per_cell_precision"] = r.per_cell_precision;
    j["per_cell_recall"] = r.per_cell_recall;
    return j.dump(2);
}

std::string summary_row(const std::string &split, const EvalReport &r)
{
    return split + "," + std::to_string(r.frames) + "," + csv_number(r.subacc) + "," + csv_number(r.macro_f1) + "," +
           csv_number(r.accuracy) + "," + std::to_string(r.epochs_to_best);
}

ReportSeries read_report(const fs::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open report '" + path.string() + "'");
    ReportSeries s;
    s.name = path.stem().string();
    std::string line;
    std::size_t line_no = 0;
    auto field = [&](const ojson &j, const char *key) {
        if (!j.contains(key))
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": missing field '" + key + "'");
        const ojson &v = j[key];
        if (v.is_null())
            return std::numeric_limits<double>::quiet_NaN();
        if (!v.is_number())
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": field '" + key + "' is not a number");
        return v.get<double>();
    };
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        ojson j;
        try
        {
            j = ojson::parse(line);
        }
        catch (const nlohmann::json::parse_error &)
        {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON");
        }
        if (!j.is_object())
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected a JSON object");
        EpochReport e;
        if (!j.contains("epoch") || !j["epoch"].is_number_unsigned())
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": missing or invalid 'epoch'");
        e.epoch = j["epoch"].get<std::size_t>();
        e.train_loss = field(j, "train_loss");
        e.val_subacc = field(j, "val_subacc");
        e.val_macro_f1 = field(j, "val_macro_f1");
        e.val_accuracy = field(j, "val_accuracy");
        s.epochs.push_back(e);
    }
    return s;
}

std::vector<fs::path> write_report_artifacts(const std::vector<ReportSeries> &series, const fs::path &out_dir)
{
    std::vector<fs::path> written;
    std::string csv = "report,epoch,train_loss,val_subacc,val_macro_f1,val_accuracy\n";
    for (const auto &s : series)
        for (const auto &e : s.epochs)
            csv += escape_csv(s.name) + "," + std::to_string(e.epoch) + "," + csv_number(e.train_loss) + "," +
                   csv_number(e.val_subacc) + "," + csv_number(e.val_macro_f1) + "," + csv_number(e.val_accuracy) + "\n";
    written.push_back(out_dir / "curves.svg");
    write_text_file(written.back(), curves_svg(series));
    written.push_back(out_dir / "curves.csv");
    write_text_file(written.back(), csv);

    if (series.size() >= 2)
    {
        std::string summary = "report,best_epoch,val_subacc,val_macro_f1,val_accuracy\n";
        for (const auto &s : series)
        {
            const EpochReport *b = best_epoch(s);
            summary += escape_csv(s.name) + ",";
            summary += b ? std::to_string(b->epoch) + "," + csv_number(b->val_subacc) + "," +
                               csv_number(b->val_macro_f1) + "," + csv_number(b->val_accuracy)
                         : std::string(",,,");
            summary += "\n";
        }
        written.push_back(out_dir / "bars.svg");
        write_text_file(written.back(), bars_svg(series));
        written.push_back(out_dir / "summary.csv");
        write_text_file(written.back(), summary);
    }
    return written;
}

} // namespace csiloc::cli
