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

#include <cmath>
#include <stdexcept>

namespace csiloc
{

namespace
{
// log(1 + e^x)
double softplus(double x)
{
    if (x > 30.0)
        return x + std::exp(-x);
    if (x < -30.0)
        return std::exp(x);
    return std::log1p(std::exp(x));
}

double logistic(double x)
{
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
} // namespace

void validate(const LossConfig &c)
{
    if (!std::isfinite(c.gamma))
        throw std::invalid_argument("loss.gamma must be finite");
    if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda))
        throw std::invalid_argument("loss.lambda must be a finite value >= 0");
    if (c.mode == LossMode::pretrain && c.lambda <= 0.0)
        throw std::invalid_argument("pretrain mode needs loss.lambda > 0");
}

LossConfig loss_config_from(const KeyValueConfig &config)
{
    LossConfig c;
    c.gamma = config.get_double("loss.gamma", c.gamma);
    c.lambda = config.get_double("loss.lambda", c.lambda);
    const std::string mode = config.get_string("loss.mode", "multi_label");
    if (mode == "multi_label")
        c.mode = LossMode::multi_label;
    else if (mode == "single_label")
        c.mode = LossMode::single_label;
    else if (mode == "pretrain")
        c.mode = LossMode::pretrain;
    else
        throw ConfigError("loss.mode: unknown value '" + mode + "'");
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

LossValue multi_target_loss(const Vector &scores, const OccupancyLabel &label, double gamma)
{
    if (std::size_t(scores.size()) != label.cells())
        throw std::invalid_argument("multi_target_loss: " + std::to_string(scores.size()) + " scores for " +
                                    std::to_string(label.cells()) + " cells");
    LossValue out;
    out.grad.resize(scores.size());
    for (Eigen::Index i = 0; i < scores.size(); ++i)
    {
        if (label.test(std::size_t(i)))
        {
            out.loss += softplus(gamma - scores[i]);
            out.grad[i] = -logistic(gamma - scores[i]);
        }
        else
        {
            out.loss += softplus(scores[i] - gamma);
            out.grad[i] = logistic(scores[i] - gamma);
        }
    }
    return out;
}

LossValue single_label_loss(const Vector &scores, std::size_t target_cell)
{
    if (scores.size() == 0 || target_cell >= std::size_t(scores.size()))
        throw std::invalid_argument("single_label_loss: target cell out of range");
    const double m = scores.maxCoeff();
    const Vector e = (scores.array() - m).exp().matrix();
    const double z = e.sum();
    LossValue out;
    out.loss = m + std::log(z) - scores[Eigen::Index(target_cell)];
    out.grad = e / z;
    out.grad[Eigen::Index(target_cell)] -= 1.0;
    return out;
}

LossValue single_label_loss(const Vector &scores, const OccupancyLabel &label)
{
    if (label.count() != 1)
        throw std::invalid_argument("single_label_loss: label " + label.to_string() + " does not hold exactly one cell");
    if (std::size_t(scores.size()) != label.cells())
        throw std::invalid_argument("single_label_loss: score length does not match the grid");
    return single_label_loss(scores, label.occupied().front());
}

RegularizerValue nuclear_regularizer(const NetworkParams &params, double lambda)
{
    RegularizerValue out;
    for (const auto &name : params.config.nuclear_set)
    {
        const Matrix w = params.matrix(name);
        const SvdResult d = svd(w);
        out.value += lambda * d.sigma.sum();
        out.grads.emplace_back(params.index_of(name), lambda * (d.U * d.V.transpose()));
    }
    return out;
}

PretrainLossValue pretrain_loss(const Vector &scores, const OccupancyLabel &label, const NetworkParams &params,
                                const LossConfig &config)
{
    if (config.mode != LossMode::pretrain)
        throw std::invalid_argument("pretrain_loss: loss mode is not pretrain");
    if (params.config.nuclear_set.empty())
        throw std::invalid_argument("pretrain_loss: empty nuclear_set");
    if (config.lambda < 0.0)
        throw std::invalid_argument("pretrain_loss: lambda must be >= 0");
    PretrainLossValue out;
    LossValue data = multi_target_loss(scores, label, config.gamma);
    out.data_grad = std::move(data.grad);
    out.regularizer = nuclear_regularizer(params, config.lambda);
    out.loss = data.loss + out.regularizer.value;
    return out;
}

} // namespace csiloc
