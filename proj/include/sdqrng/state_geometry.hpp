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

/**
 * @file state_geometry.hpp
 * @brief Pure-state families with uniform pairwise overlap.
 *
 * The adversary's optimal preparation saturates the overlap bound, so every
 * certification runs on n real unit vectors whose Gram matrix is
 * (1 - delta) I + delta J.
 */
#pragma once

#include "sdqrng/error.hpp"
#include "sdqrng/linalg.hpp"

#include <cmath>
#include <string>
#include <string_view>

namespace sdqrng {

/// Physical assumption turning a mean photon number into a pairwise overlap.
enum class OverlapKind {
    EnergyBound, ///< <N> <= mu  implies  |<psi_x|psi_y>| >= 1 - 2 mu
    OverlapBound ///< |<psi_x|psi_y>| >= exp(-mu) assumed directly
};

inline std::string_view to_string(OverlapKind k) {
    return k == OverlapKind::EnergyBound ? "energy" : "overlap";
}

inline OverlapKind overlap_kind_from_string(std::string_view s) {
    if (s == "energy")
        return OverlapKind::EnergyBound;
    if (s == "overlap")
        return OverlapKind::OverlapBound;
    throw DomainError("unknown overlap model '" + std::string(s) + "' (expected energy|overlap)");
}

/// Overlap implied by `mu` under the given assumption, clamped to [0, 1].
inline double overlap_from_model(OverlapKind kind, double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu))
        throw DomainError("mean photon number must be finite and non-negative");
    const double delta = kind == OverlapKind::EnergyBound ? 1.0 - 2.0 * mu : std::exp(-mu);
    return std::clamp(delta, 0.0, 1.0);
}

struct OverlapModel {
    OverlapKind kind = OverlapKind::EnergyBound;
    double mu = 0.0;
    double delta = 1.0;

    static OverlapModel from(OverlapKind kind, double mu) {
        return {kind, mu, overlap_from_model(kind, mu)};
    }
};

/// n unit vectors in R^n with <psi_x|psi_y> = delta for x != y.
/// Row x of `vectors` is |psi_x>.
class StateFamily {
  public:
    StateFamily() = default;

    [[nodiscard]] int n() const noexcept { return static_cast<int>(vectors_.rows()); }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] const Matrix &vectors() const noexcept { return vectors_; }
    [[nodiscard]] Vector state(int x) const { return vectors_.row(x).transpose(); }

    /// Projector |psi_x><psi_x|.
    [[nodiscard]] Matrix projector(int x) const {
        const Vector v = state(x);
        return v * v.transpose();
    }

    [[nodiscard]] Matrix gram() const { return vectors_ * vectors_.transpose(); }

  private:
    friend StateFamily build_states(int n, double delta);
    StateFamily(Matrix v, double delta) : vectors_(std::move(v)), delta_(delta) {}

    Matrix vectors_;
    double delta_ = 1.0;
};

/// Cholesky construction: the lower-triangular factor of the Gram matrix has
/// the states as rows. For n = 3 this reproduces the textbook ternary family
/// psi_0 = |0>, psi_1 = delta|0> + sqrt(1-delta^2)|1>, ...
inline StateFamily build_states(int n, double delta) {
    if (n < 2)
        throw DomainError("a state family needs at least two states");
    if (!(delta >= 0.0 && delta <= 1.0))
        throw DomainError("overlap must lie in [0, 1]");

    // Column-by-column Cholesky written out so that delta = 1 (rank one Gram
    // matrix) degrades to zero pivots instead of failing.
    Matrix l = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        double diag = 1.0;
        for (int k = 0; k < j; ++k)
            diag -= l(j, k) * l(j, k);
        if (diag < -1e-12)
            throw ConstructionError("Gram matrix is numerically indefinite");
        const double pivot = std::sqrt(std::max(diag, 0.0));
        l(j, j) = pivot;
        for (int i = j + 1; i < n; ++i) {
            double s = delta;
            for (int k = 0; k < j; ++k)
                s -= l(i, k) * l(j, k);
            l(i, j) = pivot > 0.0 ? s / pivot : 0.0;
        }
    }
    return StateFamily(std::move(l), delta);
}

} // namespace sdqrng
