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

#ifndef CSILOC_TRAINING_HPP
#define CSILOC_TRAINING_HPP

#include "csiloc/csi_model.hpp"
#include "csiloc/kv_config.hpp"
#include "csiloc/linalg.hpp"
#include "csiloc/network.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace csiloc
{

// ------------------------------------------------------------------------
// Losses
// ------------------------------------------------------------------------

enum class LossMode
{
    single_label,
    multi_label,
    pretrain
};

struct LossConfig
{
    double gamma = 0.0;
    double lambda = 1e-3;
    LossMode mode = LossMode::multi_label;
};

// Throws std::invalid_argument for lambda < 0, or lambda == 0 in pretrain mode.
void validate(const LossConfig &config);
LossConfig loss_config_from(const KeyValueConfig &config);

struct LossValue
{
    double loss = 0.0;
    Vector grad;
};

// Softplus margin loss: occupied cells are pushed above gamma, free cells below it.
LossValue multi_target_loss(const Vector &scores, const OccupancyLabel &label, double gamma);

// Softmax cross-entropy against one target cell.
LossValue single_label_loss(const Vector &scores, std::size_t target_cell);
// Same, for a label that must hold exactly one occupied cell.
LossValue single_label_loss(const Vector &scores, const OccupancyLabel &label);

struct RegularizerValue
{
    double value = 0.0;                               // lambda * sum of nuclear norms
    std::vector<std::pair<std::size_t, Matrix>> grads; // tensor index, lambda * U V^T in matrix view
};

// Nuclear-norm penalty over params.config.nuclear_set.
RegularizerValue nuclear_regularizer(const NetworkParams &params, double lambda);

struct PretrainLossValue
{
    double loss = 0.0;
    Vector data_grad;
    RegularizerValue regularizer;
};

// Requires config.mode == pretrain and a non-empty nuclear_set.
PretrainLossValue pretrain_loss(const Vector &scores, const OccupancyLabel &label, const NetworkParams &params,
                                const LossConfig &config);

// ------------------------------------------------------------------------
// Metrics
// ------------------------------------------------------------------------

// Cell i is occupied iff score_i > gamma.
OccupancyLabel predict_occupancy(const Vector &scores, double gamma);
std::vector<OccupancyLabel> predict_occupancy(const Matrix &scores, double gamma);

double subacc(std::span<const OccupancyLabel> predictions, std::span<const OccupancyLabel> truths);

// Cells with no true and no predicted positives score F1 = 1.
double macro_f1(std::span<const OccupancyLabel> predictions, std::span<const OccupancyLabel> truths);

// A frame counts as correct when its top-scoring cell is occupied, or, for an empty truth, when
// no score exceeds gamma.
double argmax_accuracy(const Matrix &scores, std::span<const OccupancyLabel> truths, double gamma);

struct CellRates
{
    std::vector<double> precision; // 1 when the cell was never predicted
    std::vector<double> recall;    // 1 when the cell was never occupied
};
CellRates per_cell_rates(std::span<const OccupancyLabel> predictions, std::span<const OccupancyLabel> truths);

// ------------------------------------------------------------------------
// Training loop
// ------------------------------------------------------------------------

enum class OptimizerKind
{
    adam,
    sgd
};

struct TrainConfig
{
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double momentum = 0.9;
    double finetune_lr = 1e-4;
};

void validate(const TrainConfig &config);
TrainConfig train_config_from(const KeyValueConfig &config);
NetConfig net_config_from(const KeyValueConfig &config, std::size_t cells);

struct EpochReport
{
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_subacc = 0.0;
    double val_macro_f1 = 0.0;
    double val_accuracy = 0.0;
};

struct EvalReport
{
    double subacc = 0.0;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    std::vector<double> per_cell_precision;
    std::vector<double> per_cell_recall;
    std::size_t epochs_to_best = 0;
    std::size_t frames = 0;
};

EvalReport evaluate(CsiResNet &net, std::span<const DualChannelInput> inputs, std::span<const OccupancyLabel> truths,
                    double gamma);
EvalReport evaluate(const NetworkParams &params, const CsiRecording &data, double gamma);

// Return false to stop after the current epoch.
using EpochCallback = std::function<bool(const EpochReport &)>;

struct FitResult
{
    NetworkParams params;          // best validation SubACC (last epoch when val is empty)
    EvalReport report;             // metrics of the returned params on val
    std::vector<EpochReport> history;
};

// Mini-batch training with a seeded shuffle per epoch. The validation metrics are NaN when val is empty.
FitResult fit(NetworkParams params, const CsiRecording &train, const CsiRecording &val, const TrainConfig &train_config,
              const LossConfig &loss_config, const EpochCallback &on_epoch = {});

// Trains every layer at finetune_lr with the multi-target (or single-label) loss. A head whose width
// differs from the target grid is re-initialised.
FitResult finetune(NetworkParams pretrained, const CsiRecording &train, const CsiRecording &val,
                   const TrainConfig &train_config, const LossConfig &loss_config, const EpochCallback &on_epoch = {});

// k-nearest-neighbour labels by Euclidean distance of the dual-channel inputs; majority vote,
// ties resolved towards the nearer neighbour.
std::vector<OccupancyLabel> nn_baseline(const CsiRecording &train, const CsiRecording &query, std::size_t k = 1);

} // namespace csiloc

#endif
