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

#include "csiloc/cli.hpp"

#include "commands.hpp"

#include "csiloc/network.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>

namespace csiloc
{

namespace
{
struct Overrides
{
    std::vector<std::pair<std::string, std::string>> entries;
    std::vector<std::string> rest;
};

// `--section.key value` and `--section.key=value` are configuration overrides; everything else
// is handed to the argument parser.
Overrides split_overrides(const std::vector<std::string> &args)
{
    Overrides o;
    for (std::size_t i = 0; i < args.size(); ++i)
    {
        const std::string &a = args[i];
        if (a.size() > 2 && a.compare(0, 2, "--") == 0)
        {
            const std::string body = a.substr(2);
            const auto eq = body.find('=');
            const std::string key = body.substr(0, eq);
            if (key.find('.') != std::string::npos)
            {
                if (eq != std::string::npos)
                    o.entries.emplace_back(key, body.substr(eq + 1));
                else if (i + 1 < args.size())
                    o.entries.emplace_back(key, args[++i]);
                else
                    throw cli::UsageError("missing value for --" + key);
                continue;
            }
        }
        o.rest.push_back(a);
    }
    return o;
}
} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"csiloc: multi-person indoor localization from WiFi CSI", "csiloc"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    app.add_option("--config", config_path, "flat key = value configuration file");
    app.add_option("--seed", seed, "seed for scenario.seed and train.seed");
    app.add_option("--threads", threads, "worker threads (1 = deterministic single-threaded mode)")
        ->check(CLI::Range(1u, 1024u));
    app.footer("Any --section.key value pair overrides the configuration file.");

    cli::SynthOptions synth;
    auto *c_synth = app.add_subcommand("synth", "render a synthetic dataset or calibration capture");
    c_synth->add_option("-o,--out", synth.out, "output CSID file")->required();
    c_synth->add_option("--configs-per-count", synth.configs_per_count,
                        "sampled configurations per occupant count >= 2");
    c_synth->add_option("--frames", synth.frames, "frames per configuration");
    c_synth->add_flag("--rig", synth.rig, "render a calibration-rig capture instead");

    cli::CalibrateOptions calib;
    auto *c_calib = app.add_subcommand("calibrate", "estimate per-antenna phase offsets from a rig capture");
    c_calib->add_option("capture", calib.capture, "rig capture (CSID)")->required();
    c_calib->add_option("-o,--out", calib.out, "output profile")->required();

    cli::PreprocessOptions prep;
    auto *c_prep = app.add_subcommand("preprocess", "calibrate, normalise and filter a dataset");
    c_prep->add_option("-i,--in", prep.in, "input CSID file")->required();
    c_prep->add_option("--profile", prep.profile, "calibration profile")->required();
    c_prep->add_option("-o,--out", prep.out, "output CSID file")->required();

    cli::TrainOptions train, pretrain;
    auto add_train = [](CLI::App *c, cli::TrainOptions &t) {
        c->add_option("--train", t.train, "training CSID file")->required();
        c->add_option("--val", t.val, "validation CSID file (default: split off train.val_fraction)");
        c->add_option("--init", t.init, "initial parameters (CSNW)");
        c->add_option("-o,--out", t.out, "output parameters (CSNW)")->required();
        c->add_option("--report", t.report, "JSON-lines epoch report (default <out>.jsonl)");
        c->add_option("--summary", t.summary, "CSV summary (default <out>.csv)");
        c->add_option("--epochs", t.epochs, "epochs (overrides train.epochs)");
    };
    auto *c_train = app.add_subcommand("train", "train the network with the multi-target loss");
    add_train(c_train, train);
    c_train->add_flag("--single-label", train.single_label, "softmax loss for one-person data");
    auto *c_pretrain = app.add_subcommand("pretrain", "train with the nuclear-norm penalty");
    add_train(c_pretrain, pretrain);

    cli::FinetuneOptions fine;
    auto *c_fine = app.add_subcommand("finetune", "fine-tune pretrained parameters on a small target split");
    c_fine->add_option("--data", fine.data, "target CSID file")->required();
    c_fine->add_option("--params", fine.params, "pretrained parameters (CSNW)");
    c_fine->add_option("-o,--out", fine.out, "output parameters (CSNW)")->required();
    c_fine->add_option("--fraction", fine.fraction, "fine-tune and validation fraction per label");
    c_fine->add_option("--report", fine.report, "JSON-lines epoch report (default <out>.jsonl)");
    c_fine->add_option("--summary", fine.summary, "CSV summary (default <out>.csv)");
    c_fine->add_option("--epochs", fine.epochs, "epochs (overrides train.epochs)");
    c_fine->add_flag("--scratch", fine.scratch, "train freshly initialised parameters instead");

    cli::EvalOptions ev;
    auto *c_eval = app.add_subcommand("eval", "evaluate parameters on a dataset");
    c_eval->add_option("--data", ev.data, "CSID file")->required();
    c_eval->add_option("--params", ev.params, "parameters (CSNW)")->required();
    c_eval->add_option("-o,--out", ev.out, "output JSON report")->required();
    c_eval->add_option("--csv", ev.csv, "output CSV summary");

    cli::ReportOptions rep;
    auto *c_report = app.add_subcommand("report", "plot epoch reports as SVG and CSV");
    c_report->add_option("reports", rep.reports, "JSON-lines epoch reports");
    c_report->add_option("-o,--out", rep.out_dir, "output directory")->required();

    try
    {
        Overrides ov;
        try
        {
            ov = split_overrides(args);
        }
        catch (const cli::UsageError &e)
        {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        }
        std::vector<std::string> reversed(ov.rest.rbegin(), ov.rest.rend());
        try
        {
            app.parse(std::move(reversed));
        }
        catch (const CLI::ParseError &e)
        {
            const int code = app.exit(e, out, err);
            return code == 0 ? kExitSuccess : kExitUsage;
        }

        KeyValueConfig config = config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(config_path);
        if (seed)
        {
            config.set("scenario.seed", std::to_string(*seed));
            config.set("train.seed", std::to_string(*seed));
        }
        for (const auto &[k, v] : ov.entries)
            config.set(k, v);
        const cli::Settings settings = cli::load_settings(config, threads);

        if (c_synth->parsed())
            cli::cmd_synth(settings, synth, out);
        else if (c_calib->parsed())
            cli::cmd_calibrate(settings, calib, out);
        else if (c_prep->parsed())
            cli::cmd_preprocess(settings, prep, out);
        else if (c_train->parsed())
            cli::cmd_train(settings, train, false, out);
        else if (c_pretrain->parsed())
            cli::cmd_train(settings, pretrain, true, out);
        else if (c_fine->parsed())
            cli::cmd_finetune(settings, fine, out);
        else if (c_eval->parsed())
            cli::cmd_eval(settings, ev, out);
        else if (c_report->parsed())
            cli::cmd_report(rep, out);
        return kExitSuccess;
    }
    catch (const cli::UsageError &e)
    {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const ConfigError &e)
    {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const std::exception &e)
    {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

} // namespace csiloc
