// Copyright 2026 The sdqrng Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>

namespace sdqrng {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Largest eigenvalue of a symmetric matrix. Eigen's self-adjoint solver
/// reduces to tridiagonal form first, then runs implicit QR.
inline double max_eigenvalue(const Matrix &a) {
    if (a.rows() == 1)
        return a(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        return std::numeric_limits<double>::quiet_NaN();
    return es.eigenvalues()(a.rows() - 1);
}

inline double min_eigenvalue(const Matrix &a) {
    if (a.rows() == 1)
        return a(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        return std::numeric_limits<double>::quiet_NaN();
    return es.eigenvalues()(0);
}

inline Matrix symmetrized(const Matrix &a) { return 0.5 * (a + a.transpose()); }

/// Frobenius inner product <a, b> = tr(a^T b).
inline double dot(const Matrix &a, const Matrix &b) { return a.cwiseProduct(b).sum(); }

} // namespace linalg
} // namespace sdqrng
