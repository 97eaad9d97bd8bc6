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

#include "csiloc/network.hpp"
#include "csiloc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace csiloc::cli
{

// ------------------------------------------------------------------------
// Settings
// ------------------------------------------------------------------------

Settings load_settings(const KeyValueConfig &config, unsigned threads)
{
    Settings s;
    s.scenario = scenario_from_config(config);
    s.filter = filter_config_from(config);
    try
    {
        validate(s.filter, s.scenario.sample_rate_hz);
    }
    catch (const std::exception &e)
    {
        throw ConfigError(e.what());
    }
    s.net = net_config_from(config, s.scenario.grid.cell_count());
    s.train = train_config_from(config);
    s.loss = loss_config_from(config);
    s.frames_per_config = config.get_u64("scenario.frames_per_config", s.frames_per_config);
    s.boot_sessions = config.get_u64("scenario.boot_sessions", s.boot_sessions);
    s.val_fraction = config.get_double("train.val_fraction", s.val_fraction);
    if (s.boot_sessions == 0)
        throw ConfigError("scenario.boot_sessions must be >= 1");
    if (!(s.val_fraction > 0.0 && s.val_fraction < 1.0))
        throw ConfigError("train.val_fraction must lie in (0, 1)");
    s.threads = std::max(1u, threads);
    config.reject_unused();
    return s;
}

// ------------------------------------------------------------------------
// Helpers
// ------------------------------------------------------------------------

void write_text_file(const fs::path &path, const std::string &text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw DataError("cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f)
        throw DataError("failed to write '" + path.string() + "'");
}

namespace
{
std::string fixed(double v, int digits = 4)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double binomial(std::size_t n, std::size_t k)
{
    double r = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        r = r * double(n - i) / double(i + 1);
    return r;
}

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<std::size_t>> all_combinations(std::size_t n, std::size_t k)
{
    std::vector<std::vector<std::size_t>> out;
    if (k > n)
        return out;
    std::vector<std::size_t> c(k);
    std::iota(c.begin(), c.end(), 0);
    while (true)
    {
        out.push_back(c);
        std::size_t i = k;
        while (i > 0 && c[i - 1] == n - k + i - 1)
            --i;
        if (i == 0)
            break;
        ++c[i - 1];
        for (std::size_t j = i; j < k; ++j)
            c[j] = c[j - 1] + 1;
    }
    return out;
}

std::vector<std::vector<std::size_t>> occupancy_configs(std::size_t cells, std::size_t count,
                                                        std::optional<std::size_t> per_count, std::uint64_t seed)
{
    constexpr double kMaxEnumerated = 2e5;
    const double total = binomial(cells, count);
    const bool sample = count >= 2 && per_count && double(*per_count) < total;
    if (!sample)
    {
        if (total > kMaxEnumerated)
            throw UsageError("too many " + std::to_string(count) + "-person configurations to enumerate; pass --configs-per-count");
        return all_combinations(cells, count);
    }
    std::mt19937_64 rng(mix_seed(seed, 0x636f6e66ULL + count));
    std::vector<std::vector<std::size_t>> out;
    if (total <= kMaxEnumerated)
    {
        out = all_combinations(cells, count);
        std::shuffle(out.begin(), out.end(), rng);
        out.resize(*per_count);
    }
    else
    {
        std::set<std::vector<std::size_t>> seen;
        std::vector<std::size_t> cell_ids(cells);
        std::iota(cell_ids.begin(), cell_ids.end(), 0);
        while (out.size() < *per_count)
        {
            std::shuffle(cell_ids.begin(), cell_ids.end(), rng);
            std::vector<std::size_t> c(cell_ids.begin(), cell_ids.begin() + std::ptrdiff_t(count));
            std::sort(c.begin(), c.end());
            if (seen.insert(c).second)
                out.push_back(std::move(c));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

CsiRecording read_data(const fs::path &path)
{
    return read_dataset_file(path);
}

NetworkParams checked_params(NetworkParams params, const CsiRecording &data, const fs::path &path)
{
    if (params.config.cells != data.grid.cell_count())
        throw DataError("shape-incompatible params: '" + path.string() + "' has a head of " +
                        std::to_string(params.config.cells) + " cells, the dataset grid is " +
                        std::to_string(data.grid.rows) + "x" + std::to_string(data.grid.cols) + " = " +
                        std::to_string(data.grid.cell_count()) + " cells");
    return params;
}

NetConfig net_for(const Settings &s, const CsiRecording &data)
{
    NetConfig c = s.net;
    c.cells = data.grid.cell_count();
    return c;
}

void keep_nuclear_set(NetworkParams &params, const Settings &s)
{
    params.config.nuclear_set = s.net.nuclear_set;
    params.config.bn_momentum = s.net.bn_momentum;
    params.config.bn_eps = s.net.bn_eps;
    for (const auto &name : params.config.nuclear_set)
        if (!params.contains(name))
            throw ConfigError("net.nuclear_set: no parameter tensor named '" + name + "'");
}

EpochCallback stream_epochs(std::ofstream &jsonl, std::ostream &out)
{
    return [&jsonl, &out](const EpochReport &r) {
        jsonl << epoch_json(r) << '\n';
        jsonl.flush();
        out << "epoch " << r.epoch << " train_loss " << fixed(r.train_loss, 6) << " val_subacc " << fixed(r.val_subacc)
            << " val_macro_f1 " << fixed(r.val_macro_f1) << " val_accuracy " << fixed(r.val_accuracy) << '\n';
        return true;
    };
}

std::ofstream open_report(const fs::path &path)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw DataError("cannot open '" + path.string() + "' for writing");
    return f;
}

fs::path with_suffix(const fs::path &p, const std::string &suffix)
{
    return fs::path(p.string() + suffix);
}
} // namespace

// ------------------------------------------------------------------------
// synth
// ------------------------------------------------------------------------

void cmd_synth(const Settings &settings, const SynthOptions &o, std::ostream &out)
{
    const ScenarioConfig &s = settings.scenario;
    const std::size_t frames = o.frames.value_or(settings.frames_per_config);
    if (frames == 0)
        throw UsageError("frame count must be >= 1");

    if (o.rig)
    {
        const BootSession session = draw_boot_session(s, 0);
        const CsiRecording capture = render_calibration_capture(s, session, frames);
        const std::size_t bytes = write_dataset_file(capture, o.out);
        out << "rig capture frames " << frames << " antennas " << s.antennas << '\n';
        out << "wrote " << o.out.string() << " (" << bytes << " bytes)\n";
        return;
    }

    const std::size_t cells = s.grid.cell_count();
    std::vector<CsiRecording> parts;
    std::uint64_t offset_us = 0;
    const std::uint64_t gap_us = std::uint64_t(std::llround(1e6 / s.sample_rate_hz));
    std::size_t index = 0;
    for (std::size_t count = 0; count <= std::min(s.max_occupants, cells); ++count)
    {
        for (const auto &combo : occupancy_configs(cells, count, o.configs_per_count, s.seed))
        {
            OccupancyLabel label(cells);
            for (auto c : combo)
                label.set(c);
            for (std::size_t b = 0; b < settings.boot_sessions; ++b)
            {
                const std::size_t n = frames / settings.boot_sessions + (b < frames % settings.boot_sessions ? 1 : 0);
                if (n == 0)
                    continue;
                const BootSession session = draw_boot_session(s, std::uint32_t(b));
                CsiRecording rec = render_recording(s, session, label, n, s.sample_rate_hz, settings.threads);
                for (auto &f : rec.frames)
                    f.timestamp_us += offset_us;
                offset_us = rec.frames.back().timestamp_us + 50 * gap_us;
                parts.push_back(std::move(rec));
            }
            out << "config " << index++ << " occupants " << label.to_string() << " frames " << frames << '\n';
        }
    }
    const CsiRecording all = concatenate(parts);
    const std::size_t bytes = write_dataset_file(all, o.out);
    out << "wrote " << o.out.string() << ": " << index << " configurations, " << all.frames.size() << " frames, "
        << bytes << " bytes\n";
}

// ------------------------------------------------------------------------
// calibrate / preprocess
// ------------------------------------------------------------------------

void cmd_calibrate(const Settings &, const CalibrateOptions &o, std::ostream &out)
{
    const CsiRecording capture = read_data(o.capture);
    const CalibrationProfile profile = estimate_phase_offsets(capture);
    save_profile(profile, o.out);
    out << "antenna  mu_rad  delta_theta_rad  resultant_length  kappa\n";
    for (std::size_t a = 0; a < profile.antennas(); ++a)
        out << a << "  " << fixed(wrap_angle(-profile.delta_theta_rad[a])) << "  " << fixed(profile.delta_theta_rad[a])
            << "  " << fixed(profile.resultant_length[a], 6) << "  " << fixed(profile.kappa[a], 2) << '\n';
    out << "wrote " << o.out.string() << '\n';
}

void cmd_preprocess(const Settings &settings, const PreprocessOptions &o, std::ostream &out)
{
    const CsiRecording in = read_data(o.in);
    CalibrationProfile profile;
    try
    {
        profile = load_profile(o.profile);
    }
    catch (const ConfigError &e)
    {
        throw DataError("calibration profile '" + o.profile.string() + "': " + e.what());
    }
    PreprocessStats st;
    const CsiRecording result = preprocess(in, profile, settings.filter, &st);
    write_dataset_file(result, o.out);
    out << "runs " << st.runs << '\n'
        << "input_energy " << format_double(st.input_energy) << '\n'
        << "calibrated_energy " << format_double(st.calibrated_energy) << '\n'
        << "band_removed_energy " << format_double(st.band_removed_energy) << '\n'
        << "output_energy " << format_double(st.output_energy) << '\n'
        << "hampel_replaced " << st.hampel_replaced << '\n'
        << "wrote " << o.out.string() << ": " << result.frames.size() << " frames\n";
}

// ------------------------------------------------------------------------
// train / pretrain / finetune
// ------------------------------------------------------------------------

void cmd_train(const Settings &settings, const TrainOptions &o, bool pretrain, std::ostream &out)
{
    TrainConfig tc = settings.train;
    if (o.epochs)
        tc.epochs = *o.epochs;
    LossConfig lc = settings.loss;
    if (pretrain)
        lc.mode = LossMode::pretrain;
    else if (o.single_label)
        lc.mode = LossMode::single_label;
    else if (lc.mode == LossMode::pretrain)
        lc.mode = LossMode::multi_label;
    if (pretrain && !(lc.lambda > 0.0))
        throw ConfigError("pretrain needs loss.lambda > 0");

    CsiRecording train = read_data(o.train);
    CsiRecording val;
    if (o.val)
    {
        val = read_data(*o.val);
    }
    else
    {
        SplitResult split = split_dataset(train, {1.0 - settings.val_fraction, settings.val_fraction, 0.0}, tc.seed);
        for (const auto &w : split.warnings)
            out << "warning: " << w << '\n';
        train = std::move(split.train);
        val = std::move(split.val);
    }
    if (train.frames.empty())
        throw DataError("empty training split");
    if (!val.frames.empty() && val.grid.cell_count() != train.grid.cell_count())
        throw DataError("validation grid differs from the training grid");

    NetworkParams params = o.init ? checked_params(load_params_file(*o.init), train, *o.init)
                                  : init_params(net_for(settings, train), tc.seed);
    keep_nuclear_set(params, settings);

    const fs::path report = o.report.value_or(with_suffix(o.out, ".jsonl"));
    const fs::path summary = o.summary.value_or(with_suffix(o.out, ".csv"));
    std::ofstream jsonl = open_report(report);
    out << (pretrain ? "pretrain" : "train") << ": " << train.frames.size() << " train frames, " << val.frames.size()
        << " validation frames\n";
    const FitResult r = fit(std::move(params), train, val, tc, lc, stream_epochs(jsonl, out));
    save_params_file(r.params, o.out);
    write_text_file(summary, std::string(kSummaryHeader) + "\n" + summary_row("val", r.report) + "\n");
    out << "best epoch " << r.report.epochs_to_best << " val_subacc " << fixed(r.report.subacc) << '\n'
        << "wrote " << o.out.string() << ", " << report.string() << ", " << summary.string() << '\n';
}

void cmd_finetune(const Settings &settings, const FinetuneOptions &o, std::ostream &out)
{
    TrainConfig tc = settings.train;
    if (o.epochs)
        tc.epochs = *o.epochs;
    LossConfig lc = settings.loss;
    if (lc.mode == LossMode::pretrain)
        lc.mode = LossMode::multi_label;
    if (!(o.fraction > 0.0 && o.fraction <= 0.5))
        throw UsageError("--fraction must lie in (0, 0.5]");
    if (!o.scratch && !o.params)
        throw UsageError("finetune needs --params (or --scratch)");

    const CsiRecording data = read_data(o.data);
    SplitResult split = split_dataset(data, {o.fraction, o.fraction, 1.0 - 2.0 * o.fraction}, tc.seed);
    for (const auto &w : split.warnings)
        out << "warning: " << w << '\n';
    if (split.train.frames.empty())
        throw DataError("empty fine-tune split");

    const fs::path report = o.report.value_or(with_suffix(o.out, ".jsonl"));
    const fs::path summary = o.summary.value_or(with_suffix(o.out, ".csv"));
    std::ofstream jsonl = open_report(report);
    out << "finetune" << (o.scratch ? " (from scratch)" : "") << ": " << split.train.frames.size() << " train, "
        << split.val.frames.size() << " validation, " << split.test.frames.size() << " test frames\n";

    FitResult r;
    if (o.scratch)
    {
        NetworkParams params = init_params(net_for(settings, data), tc.seed);
        keep_nuclear_set(params, settings);
        r = fit(std::move(params), split.train, split.val, tc, lc, stream_epochs(jsonl, out));
    }
    else
    {
        NetworkParams params = load_params_file(*o.params);
        if (params.config.cells != data.grid.cell_count())
            out << "head has " << params.config.cells << " cells, target grid has " << data.grid.cell_count()
                << "; re-initialising the head\n";
        r = finetune(std::move(params), split.train, split.val, tc, lc, stream_epochs(jsonl, out));
    }
    save_params_file(r.params, o.out);
    const EvalReport test = evaluate(r.params, split.test, lc.gamma);
    write_text_file(summary, std::string(kSummaryHeader) + "\n" + summary_row("val", r.report) + "\n" +
                                 summary_row("test", test) + "\n");
    out << "test_subacc " << fixed(test.subacc) << " test_macro_f1 " << fixed(test.macro_f1) << " test_accuracy "
        << fixed(test.accuracy) << '\n'
        << "wrote " << o.out.string() << ", " << report.string() << ", " << summary.string() << '\n';
}

// ------------------------------------------------------------------------
// eval / report
// ------------------------------------------------------------------------

void cmd_eval(const Settings &settings, const EvalOptions &o, std::ostream &out)
{
    const CsiRecording data = read_data(o.data);
    const NetworkParams params = load_params_file(o.params);
    if (params.config.cells != data.grid.cell_count())
        throw DataError("grid mismatch: dataset grid " + std::to_string(data.grid.rows) + "x" +
                        std::to_string(data.grid.cols) + " has " + std::to_string(data.grid.cell_count()) +
                        " cells, params head has " + std::to_string(params.config.cells));
    if (data.frames.empty())
        throw DataError("empty dataset");
    const EvalReport r = evaluate(params, data, settings.loss.gamma);
    write_text_file(o.out, eval_json(r) + "\n");
    if (o.csv)
        write_text_file(*o.csv, std::string(kSummaryHeader) + "\n" + summary_row("eval", r) + "\n");
    out << "frames " << r.frames << " subacc " << fixed(r.subacc) << " macro_f1 " << fixed(r.macro_f1) << " accuracy "
        << fixed(r.accuracy) << '\n'
        << "wrote " << o.out.string() << '\n';
}

void cmd_report(const ReportOptions &o, std::ostream &out)
{
    if (o.reports.empty())
        throw UsageError("report needs at least one report file");
    std::vector<ReportSeries> series;
    for (const auto &p : o.reports)
        series.push_back(read_report(p));
    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    if (ec)
        throw DataError("cannot create '" + o.out_dir.string() + "': " + ec.message());
    for (const auto &p : write_report_artifacts(series, o.out_dir))
        out << "wrote " << p.string() << '\n';
}

} // namespace csiloc::cli
