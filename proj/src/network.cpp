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

#include "csiloc/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace csiloc
{

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ------------------------------------------------------------------------
// Inputs
// ------------------------------------------------------------------------

DualChannelInput frame_to_input(const CsiFrame &frame)
{
    DualChannelInput in;
    in.antennas = frame.antennas;
    in.subcarriers = frame.subcarriers;
    const std::size_t n = frame.antennas * frame.subcarriers;
    in.planes.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i)
    {
        in.planes[i] = frame.values[i].real();
        in.planes[n + i] = frame.values[i].imag();
    }
    return in;
}

CsiFrame input_to_frame(const DualChannelInput &in)
{
    CsiFrame f(in.antennas, in.subcarriers);
    const std::size_t n = in.antennas * in.subcarriers;
    for (std::size_t i = 0; i < n; ++i)
        f.values[i] = Complex(float(in.planes[i]), float(in.planes[n + i]));
    return f;
}

std::vector<DualChannelInput> recording_to_inputs(const CsiRecording &rec)
{
    std::vector<DualChannelInput> out;
    out.reserve(rec.frames.size());
    for (const auto &f : rec.frames)
        out.push_back(frame_to_input(f));
    return out;
}

// ------------------------------------------------------------------------
// Parameters
// ------------------------------------------------------------------------

std::size_t NetworkParams::index_of(const std::string &name) const
{
    for (std::size_t i = 0; i < tensors.size(); ++i)
        if (tensors[i].name == name)
            return i;
    throw std::out_of_range("no parameter tensor named '" + name + "'");
}

bool NetworkParams::contains(const std::string &name) const
{
    for (const auto &t : tensors)
        if (t.name == name)
            return true;
    return false;
}

std::size_t NetworkParams::trainable_count() const
{
    std::size_t n = 0;
    for (const auto &t : tensors)
        if (t.trainable)
            n += t.size();
    return n;
}

Matrix NetworkParams::matrix(const std::string &name) const
{
    const Tensor &t = get(name);
    const Eigen::Index rows = Eigen::Index(t.shape.at(0));
    const Eigen::Index cols = Eigen::Index(t.size()) / rows;
    return Eigen::Map<const RowMajorMatrix>(t.data.data(), rows, cols);
}

void NetworkParams::set_matrix(const std::string &name, const Matrix &value)
{
    Tensor &t = get(name);
    const Eigen::Index rows = Eigen::Index(t.shape.at(0));
    const Eigen::Index cols = Eigen::Index(t.size()) / rows;
    if (value.rows() != rows || value.cols() != cols)
        throw std::invalid_argument("set_matrix: shape mismatch for '" + name + "'");
    Eigen::Map<RowMajorMatrix>(t.data.data(), rows, cols) = value;
}

void round_to_float(NetworkParams &params)
{
    for (auto &t : params.tensors)
        for (auto &v : t.data)
            v = double(float(v));
}

namespace
{
Tensor make_tensor(std::string name, std::vector<std::size_t> shape, bool trainable, double fill = 0.0)
{
    std::size_t n = 1;
    for (auto d : shape)
        n *= d;
    return Tensor{std::move(name), std::move(shape), std::vector<double>(n, fill), trainable};
}

void fill_uniform(Tensor &t, double bound, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto &v : t.data)
        v = u(rng);
}

void add_bn(std::vector<Tensor> &ts, const std::string &prefix, std::size_t channels)
{
    ts.push_back(make_tensor(prefix + ".gamma", {channels}, true, 1.0));
    ts.push_back(make_tensor(prefix + ".beta", {channels}, true, 0.0));
    ts.push_back(make_tensor(prefix + ".running_mean", {channels}, false, 0.0));
    ts.push_back(make_tensor(prefix + ".running_var", {channels}, false, 1.0));
}

void add_conv(std::vector<Tensor> &ts, const std::string &name, std::size_t cout, std::size_t cin, std::size_t k,
              std::mt19937_64 &rng)
{
    Tensor t = make_tensor(name, {cout, cin, k, k}, true);
    fill_uniform(t, std::sqrt(6.0 / double(cin * k * k)), rng);
    ts.push_back(std::move(t));
}

void add_head(std::vector<Tensor> &ts, std::size_t cells, std::size_t width, std::mt19937_64 &rng)
{
    const double bound = 1.0 / std::sqrt(double(width));
    Tensor w = make_tensor("head.weight", {cells, width}, true);
    fill_uniform(w, bound, rng);
    Tensor b = make_tensor("head.bias", {cells}, true);
    fill_uniform(b, bound, rng);
    ts.push_back(std::move(w));
    ts.push_back(std::move(b));
}

constexpr std::uint64_t kHeadStream = 0x68656164ULL;
} // namespace

NetworkParams init_params(const NetConfig &config, std::uint64_t seed)
{
    if (config.stem_width == 0 || config.block_widths.empty() || config.cells == 0)
        throw std::invalid_argument("network needs a stem, at least one block and at least one cell");
    std::mt19937_64 rng(seed);
    NetworkParams p;
    p.config = config;
    add_conv(p.tensors, "stem.conv.weight", config.stem_width, 2, 3, rng);
    add_bn(p.tensors, "stem.bn", config.stem_width);
    std::size_t in = config.stem_width;
    for (std::size_t b = 0; b < config.block_widths.size(); ++b)
    {
        const std::size_t out = config.block_widths[b];
        const std::string pre = "block" + std::to_string(b) + ".";
        add_conv(p.tensors, pre + "conv1.weight", out, in, 3, rng);
        add_bn(p.tensors, pre + "bn1", out);
        add_conv(p.tensors, pre + "conv2.weight", out, out, 3, rng);
        add_bn(p.tensors, pre + "bn2", out);
        if (out != in)
        {
            add_conv(p.tensors, pre + "proj.weight", out, in, 1, rng);
            add_bn(p.tensors, pre + "proj_bn", out);
        }
        in = out;
    }
    std::mt19937_64 head_rng(seed ^ kHeadStream);
    add_head(p.tensors, config.cells, in, head_rng);
    round_to_float(p);
    return p;
}

void reinit_head(NetworkParams &params, std::size_t cells, std::uint64_t seed)
{
    const std::size_t width = params.config.block_widths.back();
    std::vector<Tensor> head;
    std::mt19937_64 head_rng(seed ^ kHeadStream);
    add_head(head, cells, width, head_rng);
    for (auto &t : head)
        for (auto &v : t.data)
            v = double(float(v));
    params.get("head.weight") = std::move(head[0]);
    params.get("head.bias") = std::move(head[1]);
    params.config.cells = cells;
}

// ------------------------------------------------------------------------
// Layers
// ------------------------------------------------------------------------

namespace
{
// Activations: channels x (n * h * w), column index = (sample * h + y) * w + x.
struct Act
{
    Matrix x;
    std::size_t n = 0, h = 0, w = 0;
};

struct ConvIdx
{
    std::size_t weight = 0;
    std::size_t cin = 0, cout = 0, k = 3, stride = 1, pad = 1;

    std::size_t out_size(std::size_t in) const { return (in + 2 * pad - k) / stride + 1; }
};

struct BnIdx
{
    std::size_t gamma = 0, beta = 0, mean = 0, var = 0;
};

void im2col(const Act &in, const ConvIdx &c, std::size_t ho, std::size_t wo, Matrix &col)
{
    const std::size_t C = c.cin, k = c.k, kk = k * k;
    const std::size_t R = C * kk;
    col.resize(Eigen::Index(R), Eigen::Index(in.n * ho * wo));
    double *dst = col.data();
    const double *src = in.x.data();
    std::size_t column = 0;
    for (std::size_t n = 0; n < in.n; ++n)
        for (std::size_t oy = 0; oy < ho; ++oy)
            for (std::size_t ox = 0; ox < wo; ++ox, ++column)
            {
                double *cd = dst + column * R;
                for (std::size_t ky = 0; ky < k; ++ky)
                {
                    const std::ptrdiff_t iy = std::ptrdiff_t(oy * c.stride + ky) - std::ptrdiff_t(c.pad);
                    for (std::size_t kx = 0; kx < k; ++kx)
                    {
                        const std::ptrdiff_t ix = std::ptrdiff_t(ox * c.stride + kx) - std::ptrdiff_t(c.pad);
                        const std::size_t off = ky * k + kx;
                        if (iy < 0 || ix < 0 || iy >= std::ptrdiff_t(in.h) || ix >= std::ptrdiff_t(in.w))
                        {
                            for (std::size_t ci = 0; ci < C; ++ci)
                                cd[ci * kk + off] = 0.0;
                            continue;
                        }
                        const double *sp = src + ((n * in.h + std::size_t(iy)) * in.w + std::size_t(ix)) * C;
                        for (std::size_t ci = 0; ci < C; ++ci)
                            cd[ci * kk + off] = sp[ci];
                    }
                }
            }
}

void col2im(const Matrix &dcol, const ConvIdx &c, std::size_t n_samples, std::size_t h, std::size_t w,
            std::size_t ho, std::size_t wo, Matrix &dx)
{
    const std::size_t C = c.cin, k = c.k, kk = k * k;
    const std::size_t R = C * kk;
    dx.setZero(Eigen::Index(C), Eigen::Index(n_samples * h * w));
    double *dst = dx.data();
    const double *src = dcol.data();
    std::size_t column = 0;
    for (std::size_t n = 0; n < n_samples; ++n)
        for (std::size_t oy = 0; oy < ho; ++oy)
            for (std::size_t ox = 0; ox < wo; ++ox, ++column)
            {
                const double *cs = src + column * R;
                for (std::size_t ky = 0; ky < k; ++ky)
                {
                    const std::ptrdiff_t iy = std::ptrdiff_t(oy * c.stride + ky) - std::ptrdiff_t(c.pad);
                    if (iy < 0 || iy >= std::ptrdiff_t(h))
                        continue;
                    for (std::size_t kx = 0; kx < k; ++kx)
                    {
                        const std::ptrdiff_t ix = std::ptrdiff_t(ox * c.stride + kx) - std::ptrdiff_t(c.pad);
                        if (ix < 0 || ix >= std::ptrdiff_t(w))
                            continue;
                        double *dp = dst + ((n * h + std::size_t(iy)) * w + std::size_t(ix)) * C;
                        const std::size_t off = ky * k + kx;
                        for (std::size_t ci = 0; ci < C; ++ci)
                            dp[ci] += cs[ci * kk + off];
                    }
                }
            }
}

Eigen::Map<const RowMajorMatrix> weight_matrix(const Tensor &t, const ConvIdx &c)
{
    return {t.data.data(), Eigen::Index(c.cout), Eigen::Index(c.cin * c.k * c.k)};
}

struct BnCache
{
    Matrix xhat;
    Vector invstd;
    bool batch_stats = false;
};
} // namespace

struct CsiResNet::Layout
{
    struct Block
    {
        ConvIdx conv1, conv2, proj;
        BnIdx bn1, bn2, proj_bn;
        bool has_proj = false;
    };
    ConvIdx stem;
    BnIdx stem_bn;
    std::vector<Block> blocks;
    std::size_t head_w = 0, head_b = 0;
};

struct CsiResNet::Cache
{
    struct Block
    {
        Act in;
        Matrix col1, col2, colp;
        BnCache bn1, bn2, bnp;
        Act h1;  // after first ReLU
        Act out; // after final ReLU
    };
    bool valid = false;
    Mode mode = Mode::eval;
    std::size_t n = 0;
    Act input;
    Matrix stem_col;
    BnCache stem_bn;
    Act stem_out;
    std::vector<Block> blocks;
    Matrix features; // channels x n
};

namespace
{
BnIdx resolve_bn(const NetworkParams &p, const std::string &prefix)
{
    return {p.index_of(prefix + ".gamma"), p.index_of(prefix + ".beta"), p.index_of(prefix + ".running_mean"),
            p.index_of(prefix + ".running_var")};
}

ConvIdx resolve_conv(const NetworkParams &p, const std::string &name, std::size_t stride)
{
    ConvIdx c;
    c.weight = p.index_of(name);
    const auto &shape = p.tensors[c.weight].shape;
    if (shape.size() != 4 || shape[2] != shape[3])
        throw std::invalid_argument("tensor '" + name + "' is not a square convolution kernel");
    c.cout = shape[0];
    c.cin = shape[1];
    c.k = shape[2];
    c.stride = stride;
    c.pad = c.k / 2;
    return c;
}
} // namespace

CsiResNet::CsiResNet(NetworkParams params)
    : params_(std::move(params)), layout_(std::make_unique<Layout>()), cache_(std::make_unique<Cache>())
{
    const auto &cfg = params_.config;
    auto &L = *layout_;
    L.stem = resolve_conv(params_, "stem.conv.weight", 1);
    L.stem_bn = resolve_bn(params_, "stem.bn");
    if (L.stem.cin != 2 || L.stem.cout != cfg.stem_width)
        throw std::invalid_argument("stem kernel does not match the network configuration");
    std::size_t in = cfg.stem_width;
    for (std::size_t b = 0; b < cfg.block_widths.size(); ++b)
    {
        const std::size_t out = cfg.block_widths[b];
        const std::size_t stride = out != in ? 2 : 1;
        const std::string pre = "block" + std::to_string(b) + ".";
        Layout::Block blk;
        blk.conv1 = resolve_conv(params_, pre + "conv1.weight", stride);
        blk.conv2 = resolve_conv(params_, pre + "conv2.weight", 1);
        blk.bn1 = resolve_bn(params_, pre + "bn1");
        blk.bn2 = resolve_bn(params_, pre + "bn2");
        blk.has_proj = out != in;
        if (blk.has_proj)
        {
            blk.proj = resolve_conv(params_, pre + "proj.weight", stride);
            blk.proj_bn = resolve_bn(params_, pre + "proj_bn");
        }
        if (blk.conv1.cin != in || blk.conv1.cout != out || blk.conv2.cin != out || blk.conv2.cout != out)
            throw std::invalid_argument("block " + std::to_string(b) + " kernels do not match the configuration");
        L.blocks.push_back(blk);
        in = out;
    }
    L.head_w = params_.index_of("head.weight");
    L.head_b = params_.index_of("head.bias");
    const auto &hw = params_.tensors[L.head_w].shape;
    if (hw.size() != 2 || hw[0] != cfg.cells || hw[1] != in || params_.tensors[L.head_b].size() != cfg.cells)
        throw std::invalid_argument("head shape does not match the network configuration");
}

CsiResNet::~CsiResNet() = default;
CsiResNet::CsiResNet(CsiResNet &&) noexcept = default;
CsiResNet &CsiResNet::operator=(CsiResNet &&) noexcept = default;

namespace
{
Act conv_forward(const NetworkParams &p, const ConvIdx &c, const Act &in, Matrix &col)
{
    Act out;
    out.n = in.n;
    out.h = c.out_size(in.h);
    out.w = c.out_size(in.w);
    im2col(in, c, out.h, out.w, col);
    out.x.noalias() = weight_matrix(p.tensors[c.weight], c) * col;
    return out;
}

// Accumulates the weight gradient; returns the input gradient when requested.
void conv_backward(const NetworkParams &p, const ConvIdx &c, const Matrix &col, const Act &in, const Matrix &dout,
                   ParamGrads &grads, Matrix *din)
{
    Eigen::Map<RowMajorMatrix> dw(grads[c.weight].data(), Eigen::Index(c.cout), Eigen::Index(c.cin * c.k * c.k));
    dw.noalias() += dout * col.transpose();
    if (din)
    {
        Matrix dcol;
        dcol.noalias() = weight_matrix(p.tensors[c.weight], c).transpose() * dout;
        col2im(dcol, c, in.n, in.h, in.w, c.out_size(in.h), c.out_size(in.w), *din);
    }
}

Matrix bn_forward(NetworkParams &p, const BnIdx &idx, const Matrix &x, bool batch_stats, BnCache &cache)
{
    const Eigen::Index C = x.rows();
    const double M = double(x.cols());
    Eigen::Map<const Vector> gamma(p.tensors[idx.gamma].data.data(), C);
    Eigen::Map<const Vector> beta(p.tensors[idx.beta].data.data(), C);
    Eigen::Map<Vector> rmean(p.tensors[idx.mean].data.data(), C);
    Eigen::Map<Vector> rvar(p.tensors[idx.var].data.data(), C);

    Vector mean, var;
    if (batch_stats)
    {
        mean = x.rowwise().mean();
        var = (x.colwise() - mean).rowwise().squaredNorm() / M;
        const double m = p.config.bn_momentum;
        rmean = m * rmean + (1.0 - m) * mean;
        rvar = m * rvar + (1.0 - m) * var * (M / std::max(M - 1.0, 1.0));
    }
    else
    {
        mean = rmean;
        var = rvar;
    }
    cache.batch_stats = batch_stats;
    cache.invstd = (var.array() + p.config.bn_eps).rsqrt().matrix();
    cache.xhat = ((x.colwise() - mean).array().colwise() * cache.invstd.array()).matrix();
    return ((cache.xhat.array().colwise() * gamma.array()).colwise() + beta.array()).matrix();
}

Matrix bn_backward(const NetworkParams &p, const BnIdx &idx, const BnCache &cache, const Matrix &dy, ParamGrads &grads)
{
    const Eigen::Index C = dy.rows();
    const double M = double(dy.cols());
    Eigen::Map<const Vector> gamma(p.tensors[idx.gamma].data.data(), C);
    Eigen::Map<Vector> dgamma(grads[idx.gamma].data(), C);
    Eigen::Map<Vector> dbeta(grads[idx.beta].data(), C);
    dgamma += dy.cwiseProduct(cache.xhat).rowwise().sum();
    dbeta += dy.rowwise().sum();

    const Matrix dxhat = (dy.array().colwise() * gamma.array()).matrix();
    if (!cache.batch_stats)
        return (dxhat.array().colwise() * cache.invstd.array()).matrix();

    const Vector sum_dxhat = dxhat.rowwise().sum();
    const Vector sum_dxhat_xhat = dxhat.cwiseProduct(cache.xhat).rowwise().sum();
    Matrix dx = (dxhat * M).colwise() - sum_dxhat;
    dx -= (cache.xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
    return (dx.array().colwise() * (cache.invstd.array() / M)).matrix();
}

Matrix relu(const Matrix &x)
{
    return x.cwiseMax(0.0);
}

Matrix relu_backward(const Matrix &out, const Matrix &dy)
{
    return (out.array() > 0.0).select(dy, 0.0);
}
} // namespace

Matrix CsiResNet::forward(std::span<const DualChannelInput> batch, Mode mode)
{
    if (batch.empty())
        throw std::invalid_argument("forward: empty batch");
    const std::size_t A = batch.front().antennas, S = batch.front().subcarriers;
    const std::size_t N = batch.size();
    for (const auto &in : batch)
        if (in.antennas != A || in.subcarriers != S || in.planes.size() != 2 * A * S)
            throw std::invalid_argument("forward: inconsistent input shapes in batch");

    const Layout &L = *layout_;
    Cache &c = *cache_;
    c.valid = false;
    c.mode = mode;
    c.n = N;
    const bool batch_stats = mode == Mode::train && N > 1;

    c.input.n = N;
    c.input.h = A;
    c.input.w = S;
    c.input.x.resize(2, Eigen::Index(N * A * S));
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t plane = 0; plane < 2; ++plane)
            for (std::size_t i = 0; i < A * S; ++i)
                c.input.x(Eigen::Index(plane), Eigen::Index(n * A * S + i)) = batch[n].planes[plane * A * S + i];

    Act s = conv_forward(params_, L.stem, c.input, c.stem_col);
    s.x = relu(bn_forward(params_, L.stem_bn, s.x, batch_stats, c.stem_bn));
    c.stem_out = s;

    c.blocks.resize(L.blocks.size());
    const Act *x = &c.stem_out;
    for (std::size_t b = 0; b < L.blocks.size(); ++b)
    {
        const auto &lb = L.blocks[b];
        auto &cb = c.blocks[b];
        cb.in = *x;
        cb.h1 = conv_forward(params_, lb.conv1, cb.in, cb.col1);
        cb.h1.x = relu(bn_forward(params_, lb.bn1, cb.h1.x, batch_stats, cb.bn1));
        Act h2 = conv_forward(params_, lb.conv2, cb.h1, cb.col2);
        h2.x = bn_forward(params_, lb.bn2, h2.x, batch_stats, cb.bn2);
        if (lb.has_proj)
        {
            Act sk = conv_forward(params_, lb.proj, cb.in, cb.colp);
            h2.x += bn_forward(params_, lb.proj_bn, sk.x, batch_stats, cb.bnp);
        }
        else
        {
            h2.x += cb.in.x;
        }
        h2.x = relu(h2.x);
        cb.out = std::move(h2);
        x = &cb.out;
    }

    const std::size_t C = x->x.rows();
    const std::size_t HW = x->h * x->w;
    c.features.resize(Eigen::Index(C), Eigen::Index(N));
    for (std::size_t n = 0; n < N; ++n)
        c.features.col(Eigen::Index(n)) = x->x.middleCols(Eigen::Index(n * HW), Eigen::Index(HW)).rowwise().mean();

    const std::size_t cells = params_.config.cells;
    Eigen::Map<const RowMajorMatrix> W(params_.tensors[L.head_w].data.data(), Eigen::Index(cells), Eigen::Index(C));
    Eigen::Map<const Vector> bias(params_.tensors[L.head_b].data.data(), Eigen::Index(cells));
    Matrix scores = (W * c.features).colwise() + bias;
    c.valid = true;
    return scores.transpose();
}

ParamGrads CsiResNet::backward(const Matrix &upstream)
{
    const Cache &c = *cache_;
    if (!c.valid || c.mode != Mode::train)
        throw std::logic_error("backward requires a preceding train-mode forward pass");
    const std::size_t cells = params_.config.cells;
    if (upstream.rows() != Eigen::Index(c.n) || upstream.cols() != Eigen::Index(cells))
        throw std::invalid_argument("backward: upstream gradient shape does not match the last forward pass");

    const Layout &L = *layout_;
    ParamGrads grads(params_.tensors.size());
    for (std::size_t i = 0; i < params_.tensors.size(); ++i)
        if (params_.tensors[i].trainable)
            grads[i].assign(params_.tensors[i].size(), 0.0);

    const Matrix dscores = upstream.transpose(); // cells x n
    const std::size_t C = std::size_t(c.features.rows());
    Eigen::Map<RowMajorMatrix> dW(grads[L.head_w].data(), Eigen::Index(cells), Eigen::Index(C));
    Eigen::Map<Vector> db(grads[L.head_b].data(), Eigen::Index(cells));
    dW.noalias() += dscores * c.features.transpose();
    db += dscores.rowwise().sum();

    Eigen::Map<const RowMajorMatrix> W(params_.tensors[L.head_w].data.data(), Eigen::Index(cells), Eigen::Index(C));
    const Matrix dfeat = W.transpose() * dscores; // C x n

    const Act &last = c.blocks.empty() ? c.stem_out : c.blocks.back().out;
    const std::size_t HW = last.h * last.w;
    Matrix dx(Eigen::Index(C), Eigen::Index(c.n * HW));
    for (std::size_t n = 0; n < c.n; ++n)
        dx.middleCols(Eigen::Index(n * HW), Eigen::Index(HW)) =
            (dfeat.col(Eigen::Index(n)) / double(HW)).replicate(1, Eigen::Index(HW));

    for (std::size_t b = L.blocks.size(); b-- > 0;)
    {
        const auto &lb = L.blocks[b];
        const auto &cb = c.blocks[b];
        const Matrix dsum = relu_backward(cb.out.x, dx);

        const Matrix dh2 = bn_backward(params_, lb.bn2, cb.bn2, dsum, grads);
        Matrix dh1;
        conv_backward(params_, lb.conv2, cb.col2, cb.h1, dh2, grads, &dh1);
        dh1 = relu_backward(cb.h1.x, dh1);
        const Matrix dh1_pre = bn_backward(params_, lb.bn1, cb.bn1, dh1, grads);
        Matrix din;
        conv_backward(params_, lb.conv1, cb.col1, cb.in, dh1_pre, grads, &din);

        if (lb.has_proj)
        {
            const Matrix dp = bn_backward(params_, lb.proj_bn, cb.bnp, dsum, grads);
            Matrix dskip;
            conv_backward(params_, lb.proj, cb.colp, cb.in, dp, grads, &dskip);
            din += dskip;
        }
        else
        {
            din += dsum;
        }
        dx = std::move(din);
    }

    const Matrix dstem = bn_backward(params_, L.stem_bn, c.stem_bn, relu_backward(c.stem_out.x, dx), grads);
    conv_backward(params_, L.stem, c.stem_col, c.input, dstem, grads, nullptr);
    return grads;
}

Matrix predict_scores(CsiResNet &net, std::span<const DualChannelInput> inputs, std::size_t chunk)
{
    Matrix out(Eigen::Index(inputs.size()), Eigen::Index(net.params().config.cells));
    for (std::size_t start = 0; start < inputs.size(); start += chunk)
    {
        const std::size_t n = std::min(chunk, inputs.size() - start);
        out.middleRows(Eigen::Index(start), Eigen::Index(n)) = net.forward(inputs.subspan(start, n), Mode::eval);
    }
    return out;
}

} // namespace csiloc
