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

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace csiloc
{

namespace
{
constexpr char kMagic[4] = {'C', 'S', 'N', 'W'};

template <typename T>
void put(std::string &buf, T value)
{
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i)
    {
        buf.push_back(char(u & 0xFF));
        u = U(u >> 8);
    }
}

template <typename T>
T get(std::istream &in)
{
    unsigned char b[sizeof(T)];
    in.read(reinterpret_cast<char *>(b), sizeof(T));
    if (std::size_t(in.gcount()) != sizeof(T))
        throw NetworkFormatError("CSNW stream truncated");
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;)
        u = U((u << 8) | b[i]);
    return static_cast<T>(u);
}

bool is_running_stat(const std::string &name)
{
    auto ends_with = [&](const std::string &suffix) {
        return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    return ends_with(".running_mean") || ends_with(".running_var");
}

NetConfig infer_config(const NetworkParams &p)
{
    NetConfig cfg;
    cfg.stem_width = p.get("stem.conv.weight").shape.at(0);
    cfg.block_widths.clear();
    for (std::size_t b = 0;; ++b)
    {
        const std::string name = "block" + std::to_string(b) + ".conv1.weight";
        if (!p.contains(name))
            break;
        cfg.block_widths.push_back(p.get(name).shape.at(0));
    }
    cfg.cells = p.get("head.weight").shape.at(0);
    return cfg;
}
} // namespace

void save_params(const NetworkParams &params, std::ostream &out)
{
    std::string buf(kMagic, 4);
    put<std::uint16_t>(buf, kCsnwVersion);
    put<std::uint32_t>(buf, std::uint32_t(params.tensors.size()));
    for (const auto &t : params.tensors)
    {
        if (t.name.size() > std::numeric_limits<std::uint16_t>::max())
            throw NetworkFormatError("tensor name too long: " + t.name.substr(0, 32));
        put<std::uint16_t>(buf, std::uint16_t(t.name.size()));
        buf += t.name;
        put<std::uint16_t>(buf, std::uint16_t(t.shape.size()));
        std::size_t n = 1;
        for (auto d : t.shape)
        {
            put<std::uint32_t>(buf, std::uint32_t(d));
            n *= d;
        }
        if (n != t.data.size())
            throw NetworkFormatError("tensor '" + t.name + "' data length does not match its shape");
        for (double v : t.data)
        {
            if (!std::isfinite(v))
                throw NetworkFormatError("tensor '" + t.name + "' holds a non-finite value");
            put<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(float(v)));
        }
    }
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out)
        throw NetworkFormatError("failed to write CSNW stream");
}

NetworkParams load_params(std::istream &in)
{
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4)
        throw NetworkFormatError("CSNW stream truncated");
    if (!std::equal(magic, magic + 4, kMagic))
        throw NetworkFormatError("not a CSNW file (bad magic)");
    const auto version = get<std::uint16_t>(in);
    if (version != kCsnwVersion)
        throw NetworkFormatError("unsupported CSNW version " + std::to_string(version));
    const auto count = get<std::uint32_t>(in);

    NetworkParams p;
    for (std::uint32_t i = 0; i < count; ++i)
    {
        Tensor t;
        const auto name_len = get<std::uint16_t>(in);
        t.name.resize(name_len);
        in.read(t.name.data(), name_len);
        if (in.gcount() != name_len)
            throw NetworkFormatError("CSNW stream truncated");
        const auto rank = get<std::uint16_t>(in);
        std::size_t n = 1;
        for (std::uint16_t r = 0; r < rank; ++r)
        {
            t.shape.push_back(get<std::uint32_t>(in));
            n *= t.shape.back();
        }
        if (n > (std::size_t(1) << 30))
            throw NetworkFormatError("tensor '" + t.name + "' is implausibly large");
        t.data.resize(n);
        for (auto &v : t.data)
            v = double(std::bit_cast<float>(get<std::uint32_t>(in)));
        t.trainable = !is_running_stat(t.name);
        p.tensors.push_back(std::move(t));
    }
    try
    {
        p.config = infer_config(p);
        CsiResNet probe(p);
    }
    catch (const std::exception &e)
    {
        throw NetworkFormatError(std::string("CSNW tensors do not form a network: ") + e.what());
    }
    return p;
}

void save_params_file(const NetworkParams &params, const std::filesystem::path &path)
{
    std::ostringstream buf;
    save_params(params, buf);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw NetworkFormatError("cannot open '" + path.string() + "' for writing");
    const std::string bytes = buf.str();
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out)
        throw NetworkFormatError("failed to write '" + path.string() + "'");
}

NetworkParams load_params_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw NetworkFormatError("cannot open '" + path.string() + "'");
    return load_params(in);
}

} // namespace csiloc
