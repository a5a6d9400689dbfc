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
 * @file json_io.hpp
 * @brief JSON forms of tables, certification results, dual certificates and
 *        assembled problems.
 *
 * Every document carries "format" and "version"; readers reject anything
 * else. Doubles are written with full round-trip precision by nlohmann::json.
 */
#pragma once

#include "sdqrng/certification.hpp"
#include "sdqrng/detection_model.hpp"
#include "sdqrng/error.hpp"
#include "sdqrng/sdp_assembly.hpp"
#include "sdqrng/sdp_engine.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

namespace sdqrng::io {

using nlohmann::json;

inline constexpr int json_format_version = 1;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Hash of the shape and the exact bit patterns of the entries.
inline std::string table_hash(const ProbTable &table) {
    std::uint64_t h = fnv1a(std::to_string(table.n()) + "x" + std::to_string(table.d()));
    for (int x = 0; x < table.n(); ++x)
        for (int b = 0; b < table.d(); ++b) {
            const double v = table(x, b);
            h = fnv1a(std::string_view(reinterpret_cast<const char *>(&v), sizeof v), h);
        }
    return hex64(h);
}

namespace detail {
inline void check_header(const json &j, const std::string &format) {
    if (!j.is_object() || !j.contains("format") || j.at("format") != format)
        throw FormatError("expected a '" + format + "' document");
    if (!j.contains("version") || !j.at("version").is_number_integer())
        throw FormatError("document has no version");
    const int v = j.at("version").get<int>();
    if (v != json_format_version)
        throw FormatError("unsupported " + format + " version " + std::to_string(v));
}

inline json matrix_to_json(const Matrix &m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k)
            row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json &j) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw FormatError("expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto &row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw FormatError("ragged matrix");
        for (Eigen::Index k = 0; k < cols; ++k)
            m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}
} // namespace detail

// ------------------------------------------------------------- tables --

inline json params_to_json(const ExperimentParams &p) {
    return {{"config", to_string(p.config)}, {"n_inputs", p.n_inputs}, {"mu", p.mu},
            {"eta", p.eta},                  {"epsilon", p.epsilon}};
}

inline ExperimentParams params_from_json(const json &j) {
    ExperimentParams p;
    p.config = configuration_from_string(j.at("config").get<std::string>());
    p.n_inputs = j.at("n_inputs").get<int>();
    p.mu = j.at("mu").get<double>();
    p.eta = j.at("eta").get<double>();
    p.epsilon = j.at("epsilon").get<double>();
    p.validate();
    return p;
}

inline json table_to_json(const ProbTable &table) {
    json j{{"format", "sdqrng.table"}, {"version", json_format_version}, {"n", table.n()},
           {"d", table.d()},          {"p", detail::matrix_to_json(table.matrix())}, {"hash", table_hash(table)}};
    if (table.params())
        j["params"] = params_to_json(*table.params());
    return j;
}

inline ProbTable table_from_json(const json &j) {
    try {
        detail::check_header(j, "sdqrng.table");
        Matrix p = detail::matrix_from_json(j.at("p"));
        if (p.rows() != j.at("n").get<int>() || p.cols() != j.at("d").get<int>())
            throw FormatError("table shape disagrees with n and d");
        std::optional<ExperimentParams> params;
        if (j.contains("params"))
            params = params_from_json(j.at("params"));
        return ProbTable(std::move(p), params);
    } catch (const json::exception &e) {
        throw FormatError(std::string("malformed table document: ") + e.what());
    }
}

// ------------------------------------------------------- certificates --

/// Dual point with the data it was certified for.
struct CertificateDocument {
    DualPoint point;
    double mu = 0.0;
    OverlapKind model = OverlapKind::EnergyBound;
    double delta = 1.0;
    std::string table_hash;
    double value = 1.0;
};

inline json certificate_to_json(const CertificateDocument &c) {
    json h = json::array();
    for (const auto &m : c.point.h)
        h.push_back(detail::matrix_to_json(m));
    return {{"format", "sdqrng.certificate"},
            {"version", json_format_version},
            {"nu", detail::matrix_to_json(c.point.nu)},
            {"H", std::move(h)},
            {"mu", c.mu},
            {"delta_model", {{"kind", std::string(to_string(c.model))}, {"delta", c.delta}}},
            {"table_hash", c.table_hash},
            {"value", c.value}};
}

inline CertificateDocument certificate_from_json(const json &j) {
    try {
        detail::check_header(j, "sdqrng.certificate");
        CertificateDocument c;
        c.point.nu = detail::matrix_from_json(j.at("nu"));
        for (const auto &m : j.at("H"))
            c.point.h.push_back(detail::matrix_from_json(m));
        c.mu = j.at("mu").get<double>();
        c.model = overlap_kind_from_string(j.at("delta_model").at("kind").get<std::string>());
        c.delta = j.at("delta_model").at("delta").get<double>();
        c.table_hash = j.at("table_hash").get<std::string>();
        c.value = j.at("value").get<double>();
        return c;
    } catch (const json::exception &e) {
        throw FormatError(std::string("malformed certificate document: ") + e.what());
    }
}

inline std::string certificate_hash(const json &certificate) { return hex64(fnv1a(certificate.dump())); }

// ---------------------------------------------------------- results --

inline json cert_result_to_json(const CertResult &r, const std::string &cert_hash = {}) {
    json j{{"format", "sdqrng.cert_result"},
           {"version", json_format_version},
           {"status", to_string(r.outcome)},
           {"h_min", r.h_min},
           {"p_guess", r.p_guess},
           {"mu", r.mu},
           {"model", std::string(to_string(r.model))},
           {"delta", r.delta},
           {"slack", r.slack_used},
           {"solver_status", to_string(r.solver_status)},
           {"primal_value", r.primal_value},
           {"dual_value", r.dual_value},
           {"gap", r.gap},
           {"primal_infeasibility", r.primal_infeasibility},
           {"iterations", r.iterations},
           {"reduced", r.reduced},
           {"analytic", r.analytic},
           {"repaired", r.certificate.repaired},
           {"worst_eigenvalue", r.certificate.worst_eigenvalue}};
    if (!r.message.empty())
        j["message"] = r.message;
    if (!cert_hash.empty())
        j["certificate_hash"] = cert_hash;
    return j;
}

// ----------------------------------------------------------- problems --

/// Debug form of an assembled primal: states, table, strategies and the
/// coefficient pool, enough to rebuild the program.
inline json problem_to_json(const PrimalProblem &primal) {
    const auto &p = primal.program();
    json strategies = json::array();
    for (const auto &s : p.strategies())
        strategies.push_back(s.guess);
    json pool = json::array();
    for (const auto &m : p.pool())
        pool.push_back(detail::matrix_to_json(m));
    return {{"format", "sdqrng.problem"},
            {"version", json_format_version},
            {"n", p.n()},
            {"d", p.d()},
            {"delta", p.states().delta()},
            {"states", detail::matrix_to_json(p.states().vectors())},
            {"table", table_to_json(p.table())},
            {"reduced", p.reduced()},
            {"strategies", std::move(strategies)},
            {"multiplicity", p.multiplicity()},
            {"slack", detail::matrix_to_json(p.slack())},
            {"pool", std::move(pool)},
            {"variables", primal.variable_count()},
            {"data_constraints", primal.data_constraint_count()},
            {"normalization_constraints", primal.normalization_constraint_count()}};
}

/// Rebuild the program described by problem_to_json.
inline SdpPair problem_from_json(const json &j) {
    try {
        detail::check_header(j, "sdqrng.problem");
        const int n = j.at("n").get<int>();
        const double delta = j.at("delta").get<double>();
        ProbTable table = table_from_json(j.at("table"));
        if (table.n() != n || table.d() != j.at("d").get<int>())
            throw FormatError("problem table shape disagrees with n and d");
        std::vector<Strategy> strategies;
        for (const auto &s : j.at("strategies")) {
            Strategy st{s.get<std::vector<int>>()};
            for (int g : st.guess)
                if (g < 0 || g >= table.d())
                    throw FormatError("strategy guess out of range");
            strategies.push_back(std::move(st));
        }
        auto mult = j.at("multiplicity").get<std::vector<double>>();
        if (mult.size() != strategies.size())
            throw FormatError("multiplicity count differs from strategy count");
        auto program = std::make_shared<const GuessingProgram>(build_states(n, delta), std::move(table),
                                                               std::move(strategies), std::move(mult),
                                                               j.at("reduced").get<bool>(),
                                                               detail::matrix_from_json(j.at("slack")));
        return {PrimalProblem(program), DualProblem(program)};
    } catch (const json::exception &e) {
        throw FormatError(std::string("malformed problem document: ") + e.what());
    }
}

} // namespace sdqrng::io
