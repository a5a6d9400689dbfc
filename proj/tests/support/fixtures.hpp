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

// Random instances shared by the unit tests.
#pragma once

#include "sdqrng/detection_model.hpp"
#include "sdqrng/state_geometry.hpp"

#include <Eigen/Eigenvalues>

#include <random>
#include <vector>

namespace fixtures {

using sdqrng::Matrix;

/// Random d-outcome POVM on R^n: N_b = S^{-1/2} G_b S^{-1/2} with G_b random
/// PSD of random rank and S = sum_b G_b.
inline std::vector<Matrix> random_povm(int n, int d, std::mt19937_64 &rng) {
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> rank(1, n);
    std::vector<Matrix> parts;
    Matrix total = Matrix::Zero(n, n);
    for (int b = 0; b < d; ++b) {
        Matrix v(n, rank(rng));
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v.data()[i] = g(rng);
        parts.push_back(v * v.transpose());
        total += parts.back();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(total);
    const Matrix inv_sqrt = es.operatorInverseSqrt();
    for (auto &p : parts)
        p = inv_sqrt * p * inv_sqrt;
    return parts;
}

/// p(b|x) = <psi_x| N_b |psi_x>, rows renormalized against rounding.
inline sdqrng::ProbTable realized_table(const sdqrng::StateFamily &states, const std::vector<Matrix> &povm) {
    const int n = states.n();
    const int d = static_cast<int>(povm.size());
    Matrix p(n, d);
    for (int x = 0; x < n; ++x) {
        const auto psi = states.state(x);
        for (int b = 0; b < d; ++b)
            p(x, b) = std::max(0.0, psi.dot(povm[static_cast<std::size_t>(b)] * psi));
        p.row(x) /= p.row(x).sum();
    }
    return sdqrng::ProbTable(std::move(p));
}

} // namespace fixtures
