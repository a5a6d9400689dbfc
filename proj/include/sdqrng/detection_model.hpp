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
 * @file detection_model.hpp
 * @brief Time-bin detection statistics p(b|x) and trial simulation.
 *
 * Config I places one weak coherent pulse in bin x of n bins; the outcome is
 * the clicked bin, or the inconclusive symbol n when zero or several bins
 * click. Config II (three bins) leaves bin x empty and fills the other two;
 * its seven outcomes are listed in io/timestamps.hpp.
 *
 * Detector efficiency is folded into the vacuum probability of a pulse,
 * xi = exp(-eta * mu), and epsilon is an independent spurious click
 * probability per bin.
 */
#pragma once

#include "sdqrng/error.hpp"
#include "sdqrng/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sdqrng {

enum class Configuration { ConfigI, ConfigII };

inline std::string to_string(Configuration c) { return c == Configuration::ConfigI ? "I" : "II"; }

inline Configuration configuration_from_string(const std::string &s) {
    if (s == "I" || s == "1")
        return Configuration::ConfigI;
    if (s == "II" || s == "2")
        return Configuration::ConfigII;
    throw DomainError("unknown configuration '" + s + "' (expected I|II)");
}

struct ExperimentParams {
    Configuration config = Configuration::ConfigI;
    int n_inputs = 3;
    double mu = 0.0;
    double eta = 1.0;
    double epsilon = 0.0;

    [[nodiscard]] int outcomes() const { return config == Configuration::ConfigI ? n_inputs + 1 : 7; }

    void validate() const {
        if (config == Configuration::ConfigII && n_inputs != 3)
            throw DomainError("Config II is defined for exactly three inputs");
        if (n_inputs < 2)
            throw DomainError("at least two inputs are required");
        if (!(mu >= 0.0) || !std::isfinite(mu))
            throw DomainError("mu must be finite and non-negative");
        if (!(eta >= 0.0 && eta <= 1.0))
            throw DomainError("eta must lie in [0, 1]");
        if (!(epsilon >= 0.0 && epsilon < 1.0))
            throw DomainError("epsilon must lie in [0, 1)");
    }
};

/// Row-stochastic n x d matrix of conditional probabilities, row x = input.
class ProbTable {
  public:
    ProbTable() = default;
    explicit ProbTable(Matrix p, std::optional<ExperimentParams> params = std::nullopt)
        : p_(std::move(p)), params_(params) {
        validate(p_);
    }

    [[nodiscard]] int n() const noexcept { return static_cast<int>(p_.rows()); }
    [[nodiscard]] int d() const noexcept { return static_cast<int>(p_.cols()); }
    [[nodiscard]] double operator()(int x, int b) const { return p_(x, b); }
    [[nodiscard]] const Matrix &matrix() const noexcept { return p_; }
    [[nodiscard]] const std::optional<ExperimentParams> &params() const noexcept { return params_; }

    /// (1/n) sum_x max_b p(b|x): what an adversary achieves by always betting
    /// on the likeliest outcome of the announced input.
    [[nodiscard]] double best_deterministic_guess() const {
        return p_.rowwise().maxCoeff().sum() / static_cast<double>(n());
    }

    static void validate(const Matrix &p, double tol = 1e-12) {
        if (p.rows() < 1 || p.cols() < 2)
            throw DimensionError("probability table needs at least one row and two outcomes");
        for (Eigen::Index x = 0; x < p.rows(); ++x) {
            double s = 0.0;
            for (Eigen::Index b = 0; b < p.cols(); ++b) {
                const double v = p(x, b);
                if (!(v >= -tol && v <= 1.0 + tol))
                    throw DomainError("probability entry out of [0,1] at x=" + std::to_string(x) +
                                      ", b=" + std::to_string(b));
                s += v;
            }
            if (std::abs(s - 1.0) > 1e-9)
                throw DomainError("row x=" + std::to_string(x) + " does not sum to one");
        }
    }

  private:
    Matrix p_;
    std::optional<ExperimentParams> params_;
};

/// Config I with n bins: d = n + 1 outcomes, outcome n inconclusive.
inline ProbTable config1_table(const ExperimentParams &params) {
    params.validate();
    if (params.config != Configuration::ConfigI)
        throw DomainError("config1_table requires Config I parameters");
    const int n = params.n_inputs;
    const int d = n + 1;
    const double xi = std::exp(-params.eta * params.mu);
    const double eps = params.epsilon;
    const double quiet = std::pow(1.0 - eps, n - 1); // the other n-1 bins stay dark
    const double hit = (1.0 - xi + xi * eps) * quiet;
    const double stray = xi * eps * quiet;

    Matrix p = Matrix::Zero(n, d);
    for (int x = 0; x < n; ++x) {
        double conclusive = 0.0;
        for (int b = 0; b < n; ++b) {
            p(x, b) = b == x ? hit : stray;
            conclusive += p(x, b);
        }
        p(x, n) = 1.0 - conclusive;
    }
    return ProbTable(std::move(p), params);
}

/// Outcome index b for a Config II single click on `bin` (state x leaves bin x empty).
/// bin2 -> 3, bin1 -> 4, bin0 -> 5.
constexpr int config2_single_click_outcome(int bin) { return 5 - bin; }

/// Config II, three inputs, seven outcomes.
inline ProbTable config2_table(const ExperimentParams &params) {
    params.validate();
    if (params.config != Configuration::ConfigII)
        throw DomainError("config2_table requires Config II parameters");
    const double xi = std::exp(-params.eta * params.mu);
    const double eps = params.epsilon;
    const double lit = 1.0 - xi + xi * eps; // an occupied bin clicks
    const double dark = xi * (1.0 - eps);   // an occupied bin stays dark

    Matrix p = Matrix::Zero(3, 7);
    for (int x = 0; x < 3; ++x) {
        // Double clicks: b = x is the pair of occupied bins; b != x pairs
        // one occupied bin with a spurious click in the empty bin x.
        for (int b = 0; b < 3; ++b)
            p(x, b) = b == x ? lit * lit * (1.0 - eps) : lit * dark * eps;
        // Single clicks: an occupied bin y != x alone, or the empty bin alone.
        for (int bin = 0; bin < 3; ++bin) {
            const int b = config2_single_click_outcome(bin);
            p(x, b) = bin == x ? eps * dark * dark : lit * dark * (1.0 - eps);
        }
        double s = 0.0;
        for (int b = 0; b < 6; ++b)
            s += p(x, b);
        p(x, 6) = 1.0 - s;
    }
    return ProbTable(std::move(p), params);
}

inline ProbTable model_table(const ExperimentParams &params) {
    return params.config == Configuration::ConfigI ? config1_table(params) : config2_table(params);
}

struct TrialRecord {
    int x = 0;
    int b = 0;
    friend bool operator==(const TrialRecord &, const TrialRecord &) = default;
};

namespace detail {
/// Uniform double in [0,1) from the top 53 bits; stable across standard libraries
/// (unlike std::uniform_real_distribution).
inline double unit_uniform(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
} // namespace detail

/// Draw `count` trials: x uniform over inputs, b from row x. Deterministic in `seed`.
inline std::vector<TrialRecord> simulate_trials(const ProbTable &table, std::size_t count, std::uint64_t seed) {
    if (count < 1)
        throw DomainError("trial count must be positive");
    const int n = table.n();
    const int d = table.d();
    Matrix cdf(n, d);
    for (int x = 0; x < n; ++x) {
        double acc = 0.0;
        for (int b = 0; b < d; ++b) {
            acc += table(x, b);
            cdf(x, b) = acc;
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<TrialRecord> out;
    out.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        const int x = std::min(n - 1, static_cast<int>(detail::unit_uniform(rng) * n));
        const double u = detail::unit_uniform(rng) * cdf(x, d - 1);
        int b = 0;
        while (b < d - 1 && u >= cdf(x, b))
            ++b;
        out.push_back({x, b});
    }
    return out;
}

struct EmpiricalTable {
    ProbTable table;
    Eigen::MatrixXi counts;

    [[nodiscard]] long row_total(int x) const { return counts.row(x).sum(); }
};

/// Maximum-likelihood frequencies. Every input symbol must occur.
inline EmpiricalTable empirical_table(const std::vector<TrialRecord> &trials, int n, int d) {
    if (trials.empty())
        throw EstimationError("no trials supplied");
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n, d);
    for (const auto &t : trials) {
        if (t.x < 0 || t.x >= n || t.b < 0 || t.b >= d)
            throw EstimationError("trial symbol out of range");
        ++counts(t.x, t.b);
    }
    Matrix p(n, d);
    for (int x = 0; x < n; ++x) {
        const long total = counts.row(x).sum();
        if (total == 0)
            throw EstimationError("input x=" + std::to_string(x) + " never observed");
        for (int b = 0; b < d; ++b)
            p(x, b) = static_cast<double>(counts(x, b)) / static_cast<double>(total);
    }
    return {ProbTable(std::move(p)), std::move(counts)};
}

} // namespace sdqrng
