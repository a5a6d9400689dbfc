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
 * @file timestamps.hpp
 * @brief Detector time tags to per-trial click patterns and outcomes.
 *
 * File format, one record per line:
 *
 *     #version=1
 *     #trials=1000        (optional; otherwise inferred from the last tag)
 *     time_ps,channel
 *
 * Config II outcome table (state x leaves bin x empty):
 *
 *     {bin1,bin2} -> 0   {bin0,bin2} -> 1   {bin0,bin1} -> 2
 *     {bin2} -> 3        {bin1} -> 4        {bin0} -> 5
 *     {} or all three -> 6
 */
#pragma once

#include "sdqrng/detection_model.hpp"
#include "sdqrng/error.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sdqrng::io {

inline constexpr int timestamp_format_version = 1;

struct TimestampRecord {
    std::int64_t time_ps = 0;
    int channel = 0;
};

/// Bit k set means a click in bin k.
using ClickPattern = std::uint32_t;

struct BinningConfig {
    Configuration config = Configuration::ConfigI;
    std::int64_t period_ps = 1000;
    /// Window start per bin, relative to the start of the trial period.
    std::vector<std::int64_t> bin_offsets_ps{0, 300, 600};
    std::int64_t bin_width_ps = 250;
    /// Detector channel carrying the signal; tags on other channels are discarded.
    int channel = 0;

    [[nodiscard]] int bins() const { return static_cast<int>(bin_offsets_ps.size()); }

    void validate() const {
        if (period_ps <= 0 || bin_width_ps <= 0)
            throw DomainError("binning period and width must be positive");
        if (bins() < 2 || bins() > 31)
            throw DomainError("binning needs between 2 and 31 windows");
        if (config == Configuration::ConfigII && bins() != 3)
            throw DomainError("Config II uses exactly three bins");
        for (int k = 0; k < bins(); ++k) {
            const auto start = bin_offsets_ps[static_cast<std::size_t>(k)];
            if (start < 0 || start + bin_width_ps > period_ps)
                throw DomainError("bin window " + std::to_string(k) + " does not fit in the period");
            if (k > 0 && start < bin_offsets_ps[static_cast<std::size_t>(k - 1)] + bin_width_ps)
                throw DomainError("bin windows must be increasing and non-overlapping");
        }
    }
};

struct TimestampScan {
    std::vector<ClickPattern> patterns;
    std::size_t records = 0;
    /// Tags outside every window or on another channel.
    std::size_t discarded = 0;
};

namespace detail {
inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <class T> bool parse_int(std::string_view s, T &out) {
    s = trim(s);
    const auto *end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}
} // namespace detail

/// Single pass over a timestamp file. Trial t covers [t * period, (t+1) * period).
inline TimestampScan parse_timestamps(std::istream &is, const BinningConfig &binning) {
    binning.validate();
    TimestampScan scan;
    std::string line;
    std::size_t lineno = 0;
    bool have_version = false;
    long long declared_trials = -1;
    std::int64_t last = std::numeric_limits<std::int64_t>::min();

    while (std::getline(is, line)) {
        ++lineno;
        const std::string_view v = detail::trim(line);
        if (v.empty())
            continue;
        if (v.front() == '#') {
            const auto eq = v.find('=');
            if (eq == std::string_view::npos)
                continue; // free comment
            const auto key = detail::trim(v.substr(1, eq - 1));
            const auto val = v.substr(eq + 1);
            if (key == "version") {
                int ver = 0;
                if (!detail::parse_int(val, ver))
                    throw ParseError("malformed version header", lineno);
                if (ver != timestamp_format_version)
                    throw FormatError("unsupported timestamp format version " + std::to_string(ver));
                have_version = true;
            } else if (key == "trials") {
                if (!detail::parse_int(val, declared_trials) || declared_trials < 0)
                    throw ParseError("malformed trials header", lineno);
            }
            continue;
        }
        if (!have_version)
            throw FormatError("timestamp file lacks a #version header");

        const auto comma = v.find(',');
        TimestampRecord rec;
        if (comma == std::string_view::npos || !detail::parse_int(v.substr(0, comma), rec.time_ps) ||
            !detail::parse_int(v.substr(comma + 1), rec.channel))
            throw ParseError("expected 'time_ps,channel'", lineno);
        if (rec.time_ps < 0)
            throw ParseError("negative timestamp", lineno);
        if (rec.time_ps < last)
            throw FormatError("timestamps decrease at line " + std::to_string(lineno));
        last = rec.time_ps;
        ++scan.records;

        const auto trial = static_cast<std::size_t>(rec.time_ps / binning.period_ps);
        if (declared_trials >= 0 && trial >= static_cast<std::size_t>(declared_trials)) {
            ++scan.discarded;
            continue;
        }
        if (scan.patterns.size() <= trial)
            scan.patterns.resize(trial + 1, 0);
        if (rec.channel != binning.channel) {
            ++scan.discarded;
            continue;
        }
        const std::int64_t offset = rec.time_ps % binning.period_ps;
        bool hit = false;
        for (int k = 0; k < binning.bins(); ++k) {
            const auto start = binning.bin_offsets_ps[static_cast<std::size_t>(k)];
            if (offset >= start && offset < start + binning.bin_width_ps) {
                scan.patterns[trial] |= ClickPattern{1} << k;
                hit = true;
                break;
            }
        }
        if (!hit)
            ++scan.discarded;
    }
    if (!have_version)
        throw FormatError("timestamp file lacks a #version header");
    if (declared_trials >= 0)
        scan.patterns.resize(static_cast<std::size_t>(declared_trials), 0);
    return scan;
}

/// Protocol outcome for one trial's click pattern.
inline int outcome_from_pattern(ClickPattern pattern, Configuration config, int bins) {
    const int clicks = std::popcount(pattern);
    if (config == Configuration::ConfigI) {
        if (clicks != 1)
            return bins; // inconclusive
        return std::countr_zero(pattern);
    }
    if (clicks == 2)
        return std::countr_zero(~pattern & 0x7U); // the dark bin names the state
    if (clicks == 1)
        return config2_single_click_outcome(std::countr_zero(pattern));
    return 6;
}

inline std::vector<int> outcomes_from_patterns(const std::vector<ClickPattern> &patterns, Configuration config,
                                               int bins = 3) {
    std::vector<int> out;
    out.reserve(patterns.size());
    for (auto p : patterns)
        out.push_back(outcome_from_pattern(p, config, bins));
    return out;
}

/// A click pattern that produces outcome `b`. Inconclusive outcomes map to
/// the empty pattern.
inline ClickPattern pattern_for_outcome(int b, Configuration config, int bins) {
    if (config == Configuration::ConfigI) {
        if (b < 0 || b > bins)
            throw DomainError("outcome out of range for Config I");
        return b == bins ? 0 : ClickPattern{1} << b;
    }
    if (b < 0 || b > 6)
        throw DomainError("outcome out of range for Config II");
    if (b < 3)
        return 0x7U & ~(ClickPattern{1} << b);
    if (b < 6)
        return ClickPattern{1} << (5 - b);
    return 0;
}

/// Tags placed at the centre of each clicked window. Inverse of
/// parse_timestamps for the same binning.
inline void write_timestamps(std::ostream &os, const std::vector<ClickPattern> &patterns,
                             const BinningConfig &binning) {
    binning.validate();
    os << "#version=" << timestamp_format_version << '\n';
    os << "#trials=" << patterns.size() << '\n';
    os << "# time_ps,channel\n";
    for (std::size_t t = 0; t < patterns.size(); ++t)
        for (int k = 0; k < binning.bins(); ++k)
            if (patterns[t] >> k & 1U)
                os << static_cast<std::int64_t>(t) * binning.period_ps +
                          binning.bin_offsets_ps[static_cast<std::size_t>(k)] + binning.bin_width_ps / 2
                   << ',' << binning.channel << '\n';
    if (!os)
        throw FormatError("failed to write timestamps");
}

inline std::vector<ClickPattern> patterns_for_outcomes(const std::vector<int> &outcomes, Configuration config,
                                                       int bins) {
    std::vector<ClickPattern> out;
    out.reserve(outcomes.size());
    for (int b : outcomes)
        out.push_back(pattern_for_outcome(b, config, bins));
    return out;
}

} // namespace sdqrng::io
