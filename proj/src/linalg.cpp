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

#include "csiloc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace csiloc
{

namespace
{
constexpr double kOrthTol = 1e-15;
constexpr int kMaxSweeps = 80;

// Requires rows >= cols.
SvdResult jacobi_tall(const Matrix &m)
{
    const Eigen::Index rows = m.rows(), cols = m.cols();
    Matrix a = m;
    Matrix v = Matrix::Identity(cols, cols);

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep)
    {
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < cols; ++p)
            for (Eigen::Index q = p + 1; q < cols; ++q)
            {
                const double alpha = a.col(p).squaredNorm();
                const double beta = a.col(q).squaredNorm();
                const double gamma = a.col(p).dot(a.col(q));
                if (gamma == 0.0 || std::abs(gamma) <= kOrthTol * std::sqrt(alpha * beta))
                    continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Eigen::Index i = 0; i < rows; ++i)
                {
                    const double ap = a(i, p), aq = a(i, q);
                    a(i, p) = c * ap - s * aq;
                    a(i, q) = s * ap + c * aq;
                }
                for (Eigen::Index i = 0; i < cols; ++i)
                {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        if (!rotated)
            break;
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(cols));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    Vector norms(cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        norms(j) = a.col(j).norm();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

    SvdResult r;
    r.U = Matrix::Zero(rows, cols);
    r.V = Matrix::Zero(cols, cols);
    r.sigma = Vector::Zero(cols);
    std::vector<Eigen::Index> missing;
    for (Eigen::Index j = 0; j < cols; ++j)
    {
        const Eigen::Index src = order[std::size_t(j)];
        r.sigma(j) = norms(src);
        r.V.col(j) = v.col(src);
        if (norms(src) > 0.0 && std::isfinite(1.0 / norms(src)))
            r.U.col(j) = a.col(src) / norms(src);
        else
            missing.push_back(j);
    }

    // Null directions: complete U with unit vectors orthogonalised against the existing columns.
    Eigen::Index candidate = 0;
    for (Eigen::Index j : missing)
    {
        for (; candidate < rows; ++candidate)
        {
            Vector e = Vector::Unit(rows, candidate);
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index k = 0; k < cols; ++k)
                    if (k != j)
                        e -= r.U.col(k).dot(e) * r.U.col(k);
            const double n = e.norm();
            if (n > 1e-6)
            {
                r.U.col(j) = e / n;
                ++candidate;
                break;
            }
        }
    }
    return r;
}
} // namespace

SvdResult svd(const Matrix &m)
{
    if (!m.allFinite())
        throw std::invalid_argument("svd: matrix has non-finite entries");
    if (m.rows() >= m.cols())
        return jacobi_tall(m);
    SvdResult t = jacobi_tall(m.transpose());
    return {t.V, t.sigma, t.U};
}

double nuclear_norm(const Matrix &m)
{
    if (m.size() == 0)
        return 0.0;
    return svd(m).sigma.sum();
}

Matrix nuclear_norm_subgradient(const Matrix &m)
{
    if (m.size() == 0)
        return m;
    const SvdResult r = svd(m);
    return r.U * r.V.transpose();
}

double stable_rank(const Matrix &m)
{
    if (m.size() == 0)
        return 0.0;
    const SvdResult r = svd(m);
    const double top = r.sigma(0);
    if (top == 0.0)
        return 0.0;
    return m.squaredNorm() / (top * top);
}

} // namespace csiloc
