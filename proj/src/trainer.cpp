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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace csiloc
{

// ------------------------------------------------------------------------
// Configuration
// ------------------------------------------------------------------------

void validate(const TrainConfig &c)
{
    if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate))
        throw std::invalid_argument("train.learning_rate must be > 0");
    if (!(c.finetune_lr > 0.0) || !std::isfinite(c.finetune_lr))
        throw std::invalid_argument("train.finetune_lr must be > 0");
    if (c.batch_size == 0)
        throw std::invalid_argument("train.batch_size must be >= 1");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0) || !(c.adam_eps > 0.0))
        throw std::invalid_argument("invalid Adam coefficients");
    if (!(c.momentum >= 0.0 && c.momentum < 1.0))
        throw std::invalid_argument("train.momentum must lie in [0, 1)");
}

TrainConfig train_config_from(const KeyValueConfig &config)
{
    TrainConfig c;
    c.learning_rate = config.get_double("train.learning_rate", c.learning_rate);
    c.batch_size = config.get_u64("train.batch_size", c.batch_size);
    c.epochs = config.get_u64("train.epochs", c.epochs);
    c.seed = config.get_u64("train.seed", c.seed);
    c.beta1 = config.get_double("train.beta1", c.beta1);
    c.beta2 = config.get_double("train.beta2", c.beta2);
    c.adam_eps = config.get_double("train.adam_eps", c.adam_eps);
    c.momentum = config.get_double("train.momentum", c.momentum);
    c.finetune_lr = config.get_double("train.finetune_lr", c.finetune_lr);
    const std::string opt = config.get_string("train.optimizer", "adam");
    if (opt == "adam")
        c.optimizer = OptimizerKind::adam;
    else if (opt == "sgd")
        c.optimizer = OptimizerKind::sgd;
    else
        throw ConfigError("train.optimizer: unknown value '" + opt + "'");
    try
    {
        validate(c);
    }
    catch (const std::invalid_argument &e)
    {
        throw ConfigError(e.what());
    }
    return c;
}

NetConfig net_config_from(const KeyValueConfig &config, std::size_t cells)
{
    NetConfig c;
    c.cells = cells;
    c.stem_width = config.get_u64("net.stem_width", c.stem_width);
    c.block_widths = config.get_sizes("net.block_widths", c.block_widths);
    c.bn_momentum = config.get_double("net.bn_momentum", c.bn_momentum);
    c.bn_eps = config.get_double("net.bn_eps", c.bn_eps);
    if (config.has("net.nuclear_set"))
    {
        c.nuclear_set.clear();
        std::stringstream ss(config.get_string("net.nuclear_set", ""));
        std::string item;
        while (std::getline(ss, item, ','))
        {
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            if (b != std::string::npos)
                c.nuclear_set.push_back(item.substr(b, e - b + 1));
        }
    }
    if (c.stem_width == 0 || c.block_widths.empty() ||
        std::find(c.block_widths.begin(), c.block_widths.end(), 0) != c.block_widths.end())
        throw ConfigError("net.stem_width and net.block_widths must be positive");
    if (!(c.bn_momentum >= 0.0 && c.bn_momentum < 1.0) || !(c.bn_eps > 0.0))
        throw ConfigError("net.bn_momentum must lie in [0, 1) and net.bn_eps must be > 0");
    return c;
}

// ------------------------------------------------------------------------
// Evaluation
// ------------------------------------------------------------------------

EvalReport evaluate(CsiResNet &net, std::span<const DualChannelInput> inputs, std::span<const OccupancyLabel> truths,
                    double gamma)
{
    if (inputs.size() != truths.size())
        throw std::invalid_argument("evaluate: input and label counts differ");
    EvalReport r;
    r.frames = inputs.size();
    if (inputs.empty())
    {
        r.subacc = r.macro_f1 = r.accuracy = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    const Matrix scores = predict_scores(net, inputs);
    const auto preds = predict_occupancy(scores, gamma);
    r.subacc = subacc(preds, truths);
    r.macro_f1 = macro_f1(preds, truths);
    r.accuracy = argmax_accuracy(scores, truths, gamma);
    CellRates rates = per_cell_rates(preds, truths);
    r.per_cell_precision = std::move(rates.precision);
    r.per_cell_recall = std::move(rates.recall);
    return r;
}

EvalReport evaluate(const NetworkParams &params, const CsiRecording &data, double gamma)
{
    if (data.grid.cell_count() != params.config.cells)
        throw std::invalid_argument("grid mismatch: dataset has " + std::to_string(data.grid.cell_count()) +
                                    " cells, network head has " + std::to_string(params.config.cells));
    CsiResNet net(params);
    const auto inputs = recording_to_inputs(data);
    return evaluate(net, inputs, data.labels, gamma);
}

// ------------------------------------------------------------------------
// Optimizer
// ------------------------------------------------------------------------

namespace
{
class Optimizer
{
public:
    Optimizer(const NetworkParams &params, const TrainConfig &config, double lr) : config_(config), lr_(lr)
    {
        m_.resize(params.tensors.size());
        v_.resize(params.tensors.size());
        for (std::size_t i = 0; i < params.tensors.size(); ++i)
            if (params.tensors[i].trainable)
            {
                m_[i].assign(params.tensors[i].size(), 0.0);
                if (config.optimizer == OptimizerKind::adam)
                    v_[i].assign(params.tensors[i].size(), 0.0);
            }
    }

    void step(NetworkParams &params, const ParamGrads &grads)
    {
        ++t_;
        const double b1 = config_.beta1, b2 = config_.beta2;
        const double c1 = 1.0 - std::pow(b1, double(t_)), c2 = 1.0 - std::pow(b2, double(t_));
        for (std::size_t i = 0; i < params.tensors.size(); ++i)
        {
            auto &t = params.tensors[i];
            if (!t.trainable || grads[i].empty())
                continue;
            for (std::size_t j = 0; j < t.size(); ++j)
            {
                const double g = grads[i][j];
                if (config_.optimizer == OptimizerKind::adam)
                {
                    m_[i][j] = b1 * m_[i][j] + (1.0 - b1) * g;
                    v_[i][j] = b2 * v_[i][j] + (1.0 - b2) * g * g;
                    t.data[j] -= lr_ * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + config_.adam_eps);
                }
                else
                {
                    m_[i][j] = config_.momentum * m_[i][j] + g;
                    t.data[j] -= lr_ * m_[i][j];
                }
            }
        }
        round_to_float(params);
    }

private:
    TrainConfig config_;
    double lr_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

void check_trainable(const NetworkParams &params, const CsiRecording &data, const char *what)
{
    if (data.frames.empty())
        return;
    if (data.grid.cell_count() != params.config.cells)
        throw std::invalid_argument(std::string(what) + ": grid mismatch: dataset has " +
                                    std::to_string(data.grid.cell_count()) + " cells, network head has " +
                                    std::to_string(params.config.cells));
}

FitResult run_loop(NetworkParams params, const CsiRecording &train, const CsiRecording &val,
                   const TrainConfig &tc, const LossConfig &lc, double lr, const EpochCallback &on_epoch)
{
    validate(tc);
    validate(lc);
    if (train.frames.empty())
        throw std::invalid_argument("empty training data");
    check_trainable(params, train, "training set");
    check_trainable(params, val, "validation set");
    if (lc.mode == LossMode::pretrain && params.config.nuclear_set.empty())
        throw std::invalid_argument("pretrain mode with an empty nuclear_set");
    if (lc.mode == LossMode::single_label)
        for (std::size_t n = 0; n < train.labels.size(); ++n)
            if (train.labels[n].count() != 1)
                throw std::invalid_argument("single-label loss: frame " + std::to_string(n) + " has label " +
                                            train.labels[n].to_string());

    const auto train_inputs = recording_to_inputs(train);
    const auto val_inputs = recording_to_inputs(val);

    CsiResNet net(std::move(params));
    Optimizer opt(net.params(), tc, lr);
    std::mt19937_64 rng(tc.seed);
    std::vector<std::size_t> order(train_inputs.size());
    std::iota(order.begin(), order.end(), 0);

    FitResult result;
    result.params = net.params();
    result.report = evaluate(net, val_inputs, val.labels, lc.gamma);
    double best = -1.0;

    std::vector<DualChannelInput> batch;
    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch)
    {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size)
        {
            const std::size_t n = std::min(tc.batch_size, order.size() - start);
            batch.clear();
            for (std::size_t i = 0; i < n; ++i)
                batch.push_back(train_inputs[order[start + i]]);

            const Matrix scores = net.forward(batch, Mode::train);
            Matrix upstream(scores.rows(), scores.cols());
            double loss = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                const Vector s = scores.row(Eigen::Index(i)).transpose();
                const OccupancyLabel &label = train.labels[order[start + i]];
                LossValue lv = lc.mode == LossMode::single_label ? single_label_loss(s, label)
                                                                   : multi_target_loss(s, label, lc.gamma);
                loss += lv.loss;
                upstream.row(Eigen::Index(i)) = lv.grad.transpose() / double(n);
            }
            loss /= double(n);
            ParamGrads grads = net.backward(upstream);
            if (lc.mode == LossMode::pretrain)
            {
                const RegularizerValue reg = nuclear_regularizer(net.params(), lc.lambda);
                loss += reg.value;
                for (const auto &[index, g] : reg.grads)
                {
                    const Tensor &t = net.params().tensors[index];
                    const Eigen::Index rows = Eigen::Index(t.shape.at(0));
                    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> view(
                        grads[index].data(), rows, Eigen::Index(t.size()) / rows);
                    view += g;
                }
            }
            opt.step(net.params(), grads);
            loss_sum += loss;
            ++batches;
        }

        const EvalReport eval = evaluate(net, val_inputs, val.labels, lc.gamma);
        EpochReport rep{epoch, loss_sum / double(batches), eval.subacc, eval.macro_f1, eval.accuracy};
        result.history.push_back(rep);
        const double score = std::isnan(eval.subacc) ? 0.0 : eval.subacc;
        if (score > best || val_inputs.empty())
        {
            best = score;
            result.params = net.params();
            result.report = eval;
            result.report.epochs_to_best = epoch;
        }
        if (on_epoch && !on_epoch(rep))
            break;
    }
    return result;
}
} // namespace

FitResult fit(NetworkParams params, const CsiRecording &train, const CsiRecording &val, const TrainConfig &train_config,
              const LossConfig &loss_config, const EpochCallback &on_epoch)
{
    return run_loop(std::move(params), train, val, train_config, loss_config, train_config.learning_rate, on_epoch);
}

FitResult finetune(NetworkParams pretrained, const CsiRecording &train, const CsiRecording &val,
                   const TrainConfig &train_config, const LossConfig &loss_config, const EpochCallback &on_epoch)
{
    if (train.frames.empty())
        throw std::invalid_argument("empty fine-tune set");
    const std::size_t cells = train.grid.cell_count();
    if (pretrained.config.cells != cells)
        reinit_head(pretrained, cells, train_config.seed);
    LossConfig lc = loss_config;
    if (lc.mode == LossMode::pretrain)
        lc.mode = LossMode::multi_label;
    return run_loop(std::move(pretrained), train, val, train_config, lc, train_config.finetune_lr, on_epoch);
}

// ------------------------------------------------------------------------
// Nearest-neighbour baseline
// ------------------------------------------------------------------------

std::vector<OccupancyLabel> nn_baseline(const CsiRecording &train, const CsiRecording &query, std::size_t k)
{
    if (train.frames.empty())
        throw std::invalid_argument("nn_baseline: empty training set");
    if (k == 0)
        throw std::invalid_argument("nn_baseline: k must be >= 1");
    const std::size_t dim = 2 * train.antennas() * train.subcarriers();
    if (!query.frames.empty() && 2 * query.antennas() * query.subcarriers() != dim)
        throw std::invalid_argument("nn_baseline: query frame shape differs from the training frames");

    Matrix ref(Eigen::Index(dim), Eigen::Index(train.frames.size()));
    for (std::size_t n = 0; n < train.frames.size(); ++n)
        ref.col(Eigen::Index(n)) = Eigen::Map<const Vector>(frame_to_input(train.frames[n]).planes.data(), Eigen::Index(dim));

    k = std::min(k, train.frames.size());
    std::vector<OccupancyLabel> out;
    out.reserve(query.frames.size());
    std::vector<std::size_t> idx(train.frames.size());
    for (const auto &frame : query.frames)
    {
        const DualChannelInput in = frame_to_input(frame);
        const Eigen::Map<const Vector> q(in.planes.data(), Eigen::Index(dim));
        const Vector d2 = (ref.colwise() - q).colwise().squaredNorm().transpose();
        std::iota(idx.begin(), idx.end(), 0);
        std::partial_sort(idx.begin(), idx.begin() + std::ptrdiff_t(k), idx.end(), [&](std::size_t a, std::size_t b) {
            return d2[Eigen::Index(a)] < d2[Eigen::Index(b)] || (d2[Eigen::Index(a)] == d2[Eigen::Index(b)] && a < b);
        });
        std::size_t best = idx[0], best_votes = 0;
        for (std::size_t i = 0; i < k; ++i)
        {
            std::size_t votes = 0;
            for (std::size_t j = 0; j < k; ++j)
                votes += train.labels[idx[j]] == train.labels[idx[i]];
            if (votes > best_votes)
            {
                best_votes = votes;
                best = idx[i];
            }
        }
        out.push_back(train.labels[best]);
    }
    return out;
}

} // namespace csiloc
