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

#ifndef CSILOC_LINALG_HPP
#define CSILOC_LINALG_HPP

#include <Eigen/Dense>

namespace csiloc
{

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thin SVD: matrix = U * diag(sigma) * V^T with U m x r, V n x r, r = min(m, n) and sigma sorted
// in descending order.
struct SvdResult
{
    Matrix U;
    Vector sigma;
    Matrix V;
};

// One-sided (Hestenes) Jacobi. Throws std::invalid_argument on non-finite input.
SvdResult svd(const Matrix &matrix);

double nuclear_norm(const Matrix &matrix);

// U * V^T, the gradient of the nuclear norm where it is differentiable and a subgradient elsewhere.
Matrix nuclear_norm_subgradient(const Matrix &matrix);

// ||W||_F^2 / sigma_max^2; 0 for the zero matrix.
double stable_rank(const Matrix &matrix);

} // namespace csiloc

#endif
