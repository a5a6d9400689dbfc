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
 * @file trials.hpp
 * @brief Plain-text trial and input-sequence files.
 *
 *     #version=1            #version=1
 *     x,b                   x
 *     0,3                   2
 *     ...                   ...
 *
 * Power records use the same layout with header "x,mean_photons".
 *
 * The input-sequence file is our own format; it is not the sequence format
 * of any particular FPGA or pattern generator.
 */
#pragma once

#include "sdqrng/certification.hpp"
#include "sdqrng/detection_model.hpp"
#include "sdqrng/error.hpp"
#include "sdqrng/io/timestamps.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace sdqrng::io {

inline constexpr int trials_format_version = 1;

namespace detail {
/// Consume the "#version=N" line and the column header; returns the line count read.
inline std::size_t read_header(std::istream &is, std::string_view columns, std::string &line) {
    std::size_t lineno = 0;
    bool version = false;
    while (std::getline(is, line)) {
        ++lineno;
        const auto v = trim(line);
        if (v.empty())
            continue;
        if (!version) {
            int ver = 0;
            if (v.rfind("#version=", 0) != 0 || !parse_int(v.substr(9), ver))
                throw FormatError("missing #version header");
            if (ver != trials_format_version)
                throw FormatError("unsupported file version " + std::to_string(ver));
            version = true;
            continue;
        }
        if (v != columns)
            throw ParseError("expected column header '" + std::string(columns) + "'", lineno);
        return lineno;
    }
    throw FormatError("file ends before its column header");
}
} // namespace detail

inline void write_trials(std::ostream &os, const std::vector<TrialRecord> &trials) {
    os << "#version=" << trials_format_version << "\nx,b\n";
    for (const auto &t : trials)
        os << t.x << ',' << t.b << '\n';
    if (!os)
        throw FormatError("failed to write trials");
}

inline std::vector<TrialRecord> read_trials(std::istream &is) {
    std::string line;
    std::size_t lineno = detail::read_header(is, "x,b", line);
    std::vector<TrialRecord> out;
    while (std::getline(is, line)) {
        ++lineno;
        const auto v = detail::trim(line);
        if (v.empty() || v.front() == '#')
            continue;
        const auto comma = v.find(',');
        TrialRecord t;
        if (comma == std::string_view::npos || !detail::parse_int(v.substr(0, comma), t.x) ||
            !detail::parse_int(v.substr(comma + 1), t.b) || t.x < 0 || t.b < 0)
            throw ParseError("expected 'x,b' with non-negative integers", lineno);
        out.push_back(t);
    }
    return out;
}

inline void write_inputs(std::ostream &os, const std::vector<int> &inputs) {
    os << "#version=" << trials_format_version << "\nx\n";
    for (int x : inputs)
        os << x << '\n';
    if (!os)
        throw FormatError("failed to write inputs");
}

inline std::vector<int> read_inputs(std::istream &is) {
    std::string line;
    std::size_t lineno = detail::read_header(is, "x", line);
    std::vector<int> out;
    while (std::getline(is, line)) {
        ++lineno;
        const auto v = detail::trim(line);
        if (v.empty() || v.front() == '#')
            continue;
        int x = 0;
        if (!detail::parse_int(v, x) || x < 0)
            throw ParseError("expected a non-negative input symbol", lineno);
        out.push_back(x);
    }
    return out;
}

inline void write_power_records(std::ostream &os, const std::vector<PowerRecord> &records) {
    os << "#version=" << trials_format_version << "\nx,mean_photons\n";
    os.precision(17);
    for (const auto &r : records)
        os << r.x << ',' << r.mean_photons << '\n';
    if (!os)
        throw FormatError("failed to write power records");
}

inline std::vector<PowerRecord> read_power_records(std::istream &is) {
    std::string line;
    std::size_t lineno = detail::read_header(is, "x,mean_photons", line);
    std::vector<PowerRecord> out;
    while (std::getline(is, line)) {
        ++lineno;
        const auto v = detail::trim(line);
        if (v.empty() || v.front() == '#')
            continue;
        const auto comma = v.find(',');
        PowerRecord r;
        bool ok = comma != std::string_view::npos && detail::parse_int(v.substr(0, comma), r.x) && r.x >= 0;
        if (ok) {
            const auto num = detail::trim(v.substr(comma + 1));
            const auto *end = num.data() + num.size();
            auto [ptr, ec] = std::from_chars(num.data(), end, r.mean_photons);
            ok = ec == std::errc{} && ptr == end && std::isfinite(r.mean_photons) && r.mean_photons >= 0.0;
        }
        if (!ok)
            throw ParseError("expected 'x,mean_photons'", lineno);
        out.push_back(r);
    }
    return out;
}

/// Pair an input sequence with the outcomes decoded from timestamps.
inline std::vector<TrialRecord> join_trials(const std::vector<int> &inputs, const std::vector<int> &outcomes) {
    if (inputs.size() != outcomes.size())
        throw SizeError("input sequence has " + std::to_string(inputs.size()) + " entries but " +
                        std::to_string(outcomes.size()) + " trials were decoded");
    std::vector<TrialRecord> out(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i)
        out[i] = {inputs[i], outcomes[i]};
    return out;
}

} // namespace sdqrng::io
