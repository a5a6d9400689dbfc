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
 * @file run_config.hpp
 * @brief Flat key=value run configuration.
 *
 *     # comment
 *     version = 1
 *     config = II
 *     mu = 0.164
 *     bin_offsets_ps = 0,300,600
 *
 * Unknown keys and malformed values are errors reported with their line.
 */
#pragma once

#include "sdqrng/certification.hpp"
#include "sdqrng/detection_model.hpp"
#include "sdqrng/error.hpp"
#include "sdqrng/extraction.hpp"
#include "sdqrng/io/timestamps.hpp"
#include "sdqrng/state_geometry.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

namespace sdqrng::io {

inline constexpr int run_config_version = 1;

struct RunConfig {
    ExperimentParams experiment{Configuration::ConfigI, 3, 0.18, 1.0, 1e-5};
    OverlapKind model = OverlapKind::EnergyBound;
    SolveOptions solver;

    std::size_t trials = 1'000'000;
    std::uint64_t seed = 1;
    double eps_sec = default_eps_sec;
    double slack_sigma = 3.0;
    std::size_t block_bits = default_block_bits;

    double mu_lo = 0.02;
    double mu_hi = 0.5;
    double mu_step = 0.02;
    double mu_tol = 1e-3;

    BinningConfig binning;

    std::string out;
    std::string timestamps;
    std::string inputs;
    std::string trials_file;
    std::string table;
    std::string seed_file;

    void validate() const {
        experiment.validate();
        solver.validate();
        if (trials < 1)
            throw DomainError("trials must be positive");
        if (!(eps_sec > 0.0 && eps_sec < 1.0))
            throw DomainError("eps_sec must lie in (0, 1)");
        if (!(slack_sigma >= 0.0) || !std::isfinite(slack_sigma))
            throw DomainError("slack_sigma must be finite and non-negative");
        if (block_bits < 8)
            throw DomainError("block_bits must be at least 8");
        if (!(mu_lo >= 0.0 && mu_hi > mu_lo))
            throw DomainError("need 0 <= mu_lo < mu_hi");
        if (!(mu_step > 0.0) || !(mu_tol > 0.0))
            throw DomainError("mu_step and mu_tol must be positive");
        BinningConfig b = binning;
        b.config = experiment.config;
        b.validate();
    }

    /// Set one key from its text value; throws DomainError on bad keys or values.
    void set(const std::string &key, const std::string &value);

    /// Apply every line of a config stream; later lines win.
    void apply(std::istream &is);

    [[nodiscard]] std::string to_text() const;
};

namespace detail {
inline double to_double(const std::string &key, const std::string &v) {
    double out = 0.0;
    const auto *end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end || !std::isfinite(out))
        throw DomainError("'" + key + "' expects a number, got '" + v + "'");
    return out;
}

template <class T> T to_integer(const std::string &key, const std::string &v) {
    T out{};
    if (!parse_int(v, out))
        throw DomainError("'" + key + "' expects an integer, got '" + v + "'");
    return out;
}

inline std::vector<std::int64_t> to_int_list(const std::string &key, const std::string &v) {
    std::vector<std::int64_t> out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(to_integer<std::int64_t>(key, std::string(trim(cell))));
    if (out.empty())
        throw DomainError("'" + key + "' expects a comma separated list");
    return out;
}
} // namespace detail

inline void RunConfig::set(const std::string &key, const std::string &value) {
    using detail::to_double;
    using detail::to_integer;
    if (key == "version") {
        if (to_integer<int>(key, value) != run_config_version)
            throw FormatError("unsupported run config version " + value);
    } else if (key == "config") {
        experiment.config = configuration_from_string(value);
    } else if (key == "n_inputs") {
        experiment.n_inputs = to_integer<int>(key, value);
    } else if (key == "mu") {
        experiment.mu = to_double(key, value);
    } else if (key == "eta") {
        experiment.eta = to_double(key, value);
    } else if (key == "eps" || key == "epsilon") {
        experiment.epsilon = to_double(key, value);
    } else if (key == "model") {
        model = overlap_kind_from_string(value);
    } else if (key == "gap_tol") {
        solver.gap_tol = to_double(key, value);
    } else if (key == "feas_tol") {
        solver.feas_tol = to_double(key, value);
    } else if (key == "max_iters") {
        solver.max_iters = to_integer<int>(key, value);
    } else if (key == "trials") {
        trials = to_integer<std::size_t>(key, value);
    } else if (key == "seed") {
        seed = to_integer<std::uint64_t>(key, value);
    } else if (key == "eps_sec") {
        eps_sec = to_double(key, value);
    } else if (key == "slack_sigma") {
        slack_sigma = to_double(key, value);
    } else if (key == "block_bits") {
        block_bits = to_integer<std::size_t>(key, value);
    } else if (key == "mu_lo") {
        mu_lo = to_double(key, value);
    } else if (key == "mu_hi") {
        mu_hi = to_double(key, value);
    } else if (key == "mu_step") {
        mu_step = to_double(key, value);
    } else if (key == "mu_tol") {
        mu_tol = to_double(key, value);
    } else if (key == "period_ps") {
        binning.period_ps = to_integer<std::int64_t>(key, value);
    } else if (key == "bin_width_ps") {
        binning.bin_width_ps = to_integer<std::int64_t>(key, value);
    } else if (key == "bin_offsets_ps") {
        binning.bin_offsets_ps = detail::to_int_list(key, value);
    } else if (key == "channel") {
        binning.channel = to_integer<int>(key, value);
    } else if (key == "out") {
        out = value;
    } else if (key == "timestamps") {
        timestamps = value;
    } else if (key == "inputs") {
        inputs = value;
    } else if (key == "trials_file") {
        trials_file = value;
    } else if (key == "table") {
        table = value;
    } else if (key == "seed_file") {
        seed_file = value;
    } else {
        throw DomainError("unknown key '" + key + "'");
    }
}

inline void RunConfig::apply(std::istream &is) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto v = detail::trim(line);
        if (v.empty() || v.front() == '#')
            continue;
        const auto eq = v.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("expected 'key = value'", lineno);
        const std::string key(detail::trim(v.substr(0, eq)));
        const std::string value(detail::trim(v.substr(eq + 1)));
        try {
            set(key, value);
        } catch (const Error &e) {
            throw ParseError(e.what(), lineno);
        }
    }
}

inline std::string RunConfig::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "version = " << run_config_version << '\n'
       << "config = " << to_string(experiment.config) << '\n'
       << "n_inputs = " << experiment.n_inputs << '\n'
       << "mu = " << experiment.mu << '\n'
       << "eta = " << experiment.eta << '\n'
       << "epsilon = " << experiment.epsilon << '\n'
       << "model = " << to_string(model) << '\n'
       << "gap_tol = " << solver.gap_tol << '\n'
       << "feas_tol = " << solver.feas_tol << '\n'
       << "max_iters = " << solver.max_iters << '\n'
       << "trials = " << trials << '\n'
       << "seed = " << seed << '\n'
       << "eps_sec = " << eps_sec << '\n'
       << "slack_sigma = " << slack_sigma << '\n'
       << "block_bits = " << block_bits << '\n'
       << "mu_lo = " << mu_lo << '\n'
       << "mu_hi = " << mu_hi << '\n'
       << "mu_step = " << mu_step << '\n'
       << "mu_tol = " << mu_tol << '\n'
       << "period_ps = " << binning.period_ps << '\n'
       << "bin_width_ps = " << binning.bin_width_ps << '\n'
       << "bin_offsets_ps = ";
    for (std::size_t k = 0; k < binning.bin_offsets_ps.size(); ++k)
        os << (k ? "," : "") << binning.bin_offsets_ps[k];
    os << '\n' << "channel = " << binning.channel << '\n';
    auto path = [&](const char *key, const std::string &v) {
        if (!v.empty())
            os << key << " = " << v << '\n';
    };
    path("out", out);
    path("timestamps", timestamps);
    path("inputs", inputs);
    path("trials_file", trials_file);
    path("table", table);
    path("seed_file", seed_file);
    return os.str();
}

} // namespace sdqrng::io
