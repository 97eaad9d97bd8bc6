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

#ifndef CSILOC_CLI_COMMANDS_HPP
#define CSILOC_CLI_COMMANDS_HPP

#include "csiloc/calibration.hpp"
#include "csiloc/channel_sim.hpp"
#include "csiloc/filtering.hpp"
#include "csiloc/kv_config.hpp"
#include "csiloc/training.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace csiloc::cli
{

namespace fs = std::filesystem;

class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct Settings
{
    ScenarioConfig scenario;
    FilterConfig filter;
    NetConfig net;
    TrainConfig train;
    LossConfig loss;
    std::size_t frames_per_config = 550;
    std::size_t boot_sessions = 1;
    double val_fraction = 0.2;
    unsigned threads = 1;
};

// Reads every known section and rejects leftover keys.
Settings load_settings(const KeyValueConfig &config, unsigned threads);

struct SynthOptions
{
    fs::path out;
    std::optional<std::size_t> configs_per_count;
    std::optional<std::size_t> frames;
    bool rig = false;
};

struct CalibrateOptions
{
    fs::path capture;
    fs::path out;
};

struct PreprocessOptions
{
    fs::path in;
    fs::path profile;
    fs::path out;
};

struct TrainOptions
{
    fs::path train;
    std::optional<fs::path> val;
    std::optional<fs::path> init;
    fs::path out;
    std::optional<fs::path> report;
    std::optional<fs::path> summary;
    std::optional<std::size_t> epochs;
    bool single_label = false;
};

struct FinetuneOptions
{
    fs::path data;
    std::optional<fs::path> params;
    fs::path out;
    std::optional<fs::path> report;
    std::optional<fs::path> summary;
    std::optional<std::size_t> epochs;
    double fraction = 0.01;
    bool scratch = false;
};

struct EvalOptions
{
    fs::path data;
    fs::path params;
    fs::path out;
    std::optional<fs::path> csv;
};

struct ReportOptions
{
    std::vector<fs::path> reports;
    fs::path out_dir;
};

void cmd_synth(const Settings &settings, const SynthOptions &options, std::ostream &out);
void cmd_calibrate(const Settings &settings, const CalibrateOptions &options, std::ostream &out);
void cmd_preprocess(const Settings &settings, const PreprocessOptions &options, std::ostream &out);
void cmd_train(const Settings &settings, const TrainOptions &options, bool pretrain, std::ostream &out);
void cmd_finetune(const Settings &settings, const FinetuneOptions &options, std::ostream &out);
void cmd_eval(const Settings &settings, const EvalOptions &options, std::ostream &out);
void cmd_report(const ReportOptions &options, std::ostream &out);

// ------------------------------------------------------------------------
// Report files
// ------------------------------------------------------------------------

std::string epoch_json(const EpochReport &report);
std::string eval_json(const EvalReport &report);

inline constexpr const char *kSummaryHeader = "split,frames,subacc,macro_f1,accuracy,epochs_to_best";
std::string summary_row(const std::string &split, const EvalReport &report);

struct ReportSeries
{
    std::string name;
    std::vector<EpochReport> epochs;
};

// Throws DataError naming the offending line.
ReportSeries read_report(const fs::path &path);

// Writes curves.svg and curves.csv, plus bars.svg and summary.csv for two or more series.
std::vector<fs::path> write_report_artifacts(const std::vector<ReportSeries> &series, const fs::path &out_dir);

void write_text_file(const fs::path &path, const std::string &text);

} // namespace csiloc::cli

#endif
