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

#ifndef CSILOC_NETWORK_HPP
#define CSILOC_NETWORK_HPP

#include "csiloc/csi_model.hpp"
#include "csiloc/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace csiloc
{

enum class Mode
{
    train,
    eval
};

struct Tensor
{
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;
    bool trainable = true;

    std::size_t size() const { return data.size(); }
    bool operator==(const Tensor &) const = default;
};

// Real and imaginary planes of a preprocessed frame: planes[p * A * S + a * S + k].
struct DualChannelInput
{
    std::size_t antennas = 0;
    std::size_t subcarriers = 0;
    std::vector<double> planes;

    double at(std::size_t plane, std::size_t a, std::size_t k) const { return planes[(plane * antennas + a) * subcarriers + k]; }
};

DualChannelInput frame_to_input(const CsiFrame &frame);
CsiFrame input_to_frame(const DualChannelInput &input);
std::vector<DualChannelInput> recording_to_inputs(const CsiRecording &recording);

// Residual network layout. Each block: conv3x3 -> BN -> ReLU -> conv3x3 -> BN, plus an identity skip,
// or a 1x1 stride-2 projection + BN when the width changes; then ReLU. A block that changes width
// also downsamples with stride 2. Global average pooling feeds a linear head with one score per cell.
struct NetConfig
{
    std::size_t stem_width = 16;
    std::vector<std::size_t> block_widths{16, 32, 32};
    std::size_t cells = 12;
    double bn_momentum = 0.9;
    double bn_eps = 1e-5;
    std::vector<std::string> nuclear_set{"head.weight"};

    bool operator==(const NetConfig &) const = default;
};

struct NetworkParams
{
    NetConfig config;
    std::vector<Tensor> tensors;

    std::size_t index_of(const std::string &name) const;
    bool contains(const std::string &name) const;
    Tensor &get(const std::string &name) { return tensors[index_of(name)]; }
    const Tensor &get(const std::string &name) const { return tensors[index_of(name)]; }
    std::size_t trainable_count() const;

    // Row-major view as shape[0] x (size / shape[0]).
    Matrix matrix(const std::string &name) const;
    void set_matrix(const std::string &name, const Matrix &value);

    bool operator==(const NetworkParams &) const = default;
};

// Fan-in scaled uniform initialisation, rounded to float precision.
NetworkParams init_params(const NetConfig &config, std::uint64_t seed);

// Re-initialise the head for a different cell count (same seed rule as init_params).
void reinit_head(NetworkParams &params, std::size_t cells, std::uint64_t seed);

// Rounds every value to the nearest float so that CSNW files hold parameters exactly.
void round_to_float(NetworkParams &params);

// Gradients aligned with NetworkParams::tensors (empty vectors for non-trainable tensors).
using ParamGrads = std::vector<std::vector<double>>;

class CsiResNet
{
public:
    explicit CsiResNet(NetworkParams params);
    ~CsiResNet();
    CsiResNet(CsiResNet &&) noexcept;
    CsiResNet &operator=(CsiResNet &&) noexcept;

    const NetworkParams &params() const { return params_; }
    NetworkParams &params() { return params_; }

    // Scores, batch x cells. Train mode normalises with batch statistics and updates the running
    // statistics; a batch of one falls back to the running statistics. Eval mode is a pure function.
    Matrix forward(std::span<const DualChannelInput> batch, Mode mode);

    // Gradients of sum(upstream .* scores) for the most recent train-mode forward pass.
    ParamGrads backward(const Matrix &upstream);

private:
    struct Layout;
    struct Cache;
    NetworkParams params_;
    std::unique_ptr<Layout> layout_;
    std::unique_ptr<Cache> cache_;
};

// Eval-mode scores for an arbitrary number of inputs, computed in chunks.
Matrix predict_scores(CsiResNet &net, std::span<const DualChannelInput> inputs, std::size_t chunk = 256);

// ------------------------------------------------------------------------
// CSNW parameter files
// ------------------------------------------------------------------------

class NetworkFormatError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint16_t kCsnwVersion = 1;

void save_params(const NetworkParams &params, std::ostream &out);
NetworkParams load_params(std::istream &in);
void save_params_file(const NetworkParams &params, const std::filesystem::path &path);
NetworkParams load_params_file(const std::filesystem::path &path);

} // namespace csiloc

#endif
