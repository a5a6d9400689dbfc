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

// Reference computations for the tests. Nothing here calls into the library;
// each oracle recomputes its quantity the slow, obvious way.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

using Table = std::vector<std::vector<double>>;

// ------------------------------------------------------ detection model --

/// Probability of each click pattern when bin k clicks independently with q[k].
inline std::vector<double> pattern_probabilities(const std::vector<double> &q) {
    const std::size_t bins = q.size();
    std::vector<double> out(std::size_t{1} << bins, 1.0);
    for (std::size_t pat = 0; pat < out.size(); ++pat)
        for (std::size_t k = 0; k < bins; ++k)
            out[pat] *= (pat >> k & 1U) ? q[k] : 1.0 - q[k];
    return out;
}

/// Config I by enumeration of the 2^n click patterns.
inline Table config1(int n, double mu, double eta, double eps) {
    Table t(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n + 1), 0.0));
    for (int x = 0; x < n; ++x) {
        std::vector<double> q(static_cast<std::size_t>(n), eps);
        // Pulse in bin x: the bin stays dark only if no photon is detected and no dark count fires.
        q[static_cast<std::size_t>(x)] = 1.0 - std::exp(-eta * mu) * (1.0 - eps);
        const auto pp = pattern_probabilities(q);
        for (std::size_t pat = 0; pat < pp.size(); ++pat) {
            int clicks = 0, where = -1;
            for (int k = 0; k < n; ++k)
                if (pat >> k & 1U) {
                    ++clicks;
                    where = k;
                }
            t[static_cast<std::size_t>(x)][static_cast<std::size_t>(clicks == 1 ? where : n)] += pp[pat];
        }
    }
    return t;
}

/// Config II outcome for a three-bit click pattern, written as a lookup table.
inline int config2_outcome(unsigned pattern) {
    //                       000 001 010 011 100 101 110 111
    static const int map[8] = {6, 5, 4, 2, 3, 1, 0, 6};
    return map[pattern & 7U];
}

inline Table config2(double mu, double eta, double eps) {
    Table t(3, std::vector<double>(7, 0.0));
    for (int x = 0; x < 3; ++x) {
        std::vector<double> q(3, 1.0 - std::exp(-eta * mu) * (1.0 - eps));
        q[static_cast<std::size_t>(x)] = eps; // the empty bin
        const auto pp = pattern_probabilities(q);
        for (unsigned pat = 0; pat < 8; ++pat)
            t[static_cast<std::size_t>(x)][static_cast<std::size_t>(config2_outcome(pat))] += pp[pat];
    }
    return t;
}

// ------------------------------------------------------------ simplex LP --

/// maximize c.w  subject to  A w = b, w >= 0  (b >= 0). Dense two-phase
/// tableau simplex, Bland's rule. Throws if infeasible.
inline double simplex_max(const std::vector<std::vector<double>> &A, const std::vector<double> &b,
                          const std::vector<double> &c) {
    const std::size_t m = A.size();
    const std::size_t n = c.size();
    const std::size_t cols = n + m + 1; // variables, artificials, rhs
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(cols, 0.0));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            T[i][j] = A[i][j];
        T[i][n + i] = 1.0;
        T[i][cols - 1] = b[i];
        basis[i] = n + i;
    }
    const double tol = 1e-12;

    auto pivot = [&](std::size_t r, std::size_t col) {
        const double p = T[r][col];
        for (auto &v : T[r])
            v /= p;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == r || T[i][col] == 0.0)
                continue;
            const double f = T[i][col];
            for (std::size_t j = 0; j < cols; ++j)
                T[i][j] -= f * T[r][j];
        }
        basis[r] = col;
    };
    // Objective row holds reduced costs of a minimization: z_j - c_j.
    auto run = [&](std::size_t allowed) {
        for (int iter = 0; iter < 100000; ++iter) {
            std::size_t enter = cols;
            for (std::size_t j = 0; j < allowed; ++j)
                if (T[m][j] < -tol) {
                    enter = j;
                    break;
                }
            if (enter == cols)
                return;
            std::size_t leave = m;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i)
                if (T[i][enter] > tol) {
                    const double ratio = T[i][cols - 1] / T[i][enter];
                    if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            if (leave == m)
                throw std::runtime_error("simplex: unbounded");
            pivot(leave, enter);
        }
        throw std::runtime_error("simplex: iteration limit");
    };

    // Phase 1: minimize the sum of artificials.
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            s += T[i][j];
        T[m][j] = j >= n && j < n + m ? 0.0 : -s;
    }
    run(n);
    if (-T[m][cols - 1] > 1e-9)
        throw std::runtime_error("simplex: infeasible");
    // Phase 2: minimize -c.w over the original variables.
    for (std::size_t j = 0; j < cols; ++j)
        T[m][j] = j < n ? -c[j] : 0.0;
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n) {
            const double f = T[m][basis[i]];
            for (std::size_t j = 0; j < cols; ++j)
                T[m][j] -= f * T[i][j];
        }
    run(n);
    return T[m][cols - 1];
}

// ------------------------------------------------ two-state guessing --

/// Guessing probability for two real states with overlap delta and a two
/// outcome table t[x][b], by optimizing over mixtures of projective qubit
/// measurements on an angle grid plus the two constant measurements. In each
/// mixture component Eve guesses the more likely outcome for each input.
inline double guessing_probability_2x2(double delta, const Table &t, double step = 1e-4) {
    const double s = std::sqrt(std::max(0.0, 1.0 - delta * delta));
    std::vector<std::vector<double>> A(3);
    std::vector<double> c;
    auto add = [&](double p0, double p1) {
        A[0].push_back(p0);
        A[1].push_back(p1);
        A[2].push_back(1.0);
        c.push_back(0.5 * (std::max(p0, 1.0 - p0) + std::max(p1, 1.0 - p1)));
    };
    add(1.0, 1.0);
    add(0.0, 0.0);
    // Outcome 0 projects onto (cos th, sin th); th and th + pi give the same measurement.
    for (double th = 0.0; th < std::numbers::pi; th += step) {
        const double a0 = std::cos(th);
        const double a1 = delta * std::cos(th) + s * std::sin(th);
        add(a0 * a0, a1 * a1);
    }
    return simplex_max(A, {t[0][0], t[1][0], 1.0}, c);
}

// ------------------------------------------------------------ Toeplitz --

/// Explicit m x L Toeplitz matrix, T[i][j] = seed[i - j + L - 1].
inline std::vector<std::vector<int>> toeplitz_matrix(const std::string &seed, std::size_t L, std::size_t m) {
    if (seed.size() != L + m - 1)
        throw std::invalid_argument("seed length");
    std::vector<std::vector<int>> T(m, std::vector<int>(L));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < L; ++j)
            T[i][j] = seed[i + L - 1 - j] - '0';
    return T;
}

inline std::string mat_vec_gf2(const std::vector<std::vector<int>> &T, const std::string &x) {
    std::string y;
    for (const auto &row : T) {
        int acc = 0;
        for (std::size_t j = 0; j < row.size(); ++j)
            acc ^= row[j] & (x[j] - '0');
        y.push_back(static_cast<char>('0' + acc));
    }
    return y;
}

inline std::string random_bits(std::mt19937_64 &rng, std::size_t n) {
    std::string s(n, '0');
    for (auto &ch : s)
        ch = static_cast<char>('0' + (rng() & 1U));
    return s;
}

} // namespace oracle
