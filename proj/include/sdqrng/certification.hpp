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
 * @file certification.hpp
 * @brief Min-entropy certification, parameter sweeps and energy monitoring.
 *
 * Every failure path reports p_guess = 1 and h_min = 0. A certified value is
 * only produced from a dual point whose LMI blocks were checked after the
 * solve.
 */
#pragma once

#include "sdqrng/detection_model.hpp"
#include "sdqrng/error.hpp"
#include "sdqrng/sdp_assembly.hpp"
#include "sdqrng/sdp_engine.hpp"
#include "sdqrng/state_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace sdqrng {

/// -log2(p) for p in (0, 1].
inline double hmin_from_pguess(double p) {
    if (!(p > 0.0 && p <= 1.0))
        throw DomainError("guessing probability must lie in (0, 1]");
    return p == 1.0 ? 0.0 : -std::log2(p);
}

enum class CertOutcome {
    Certified,    ///< verified dual bound
    Inconsistent, ///< no quantum model with this overlap reproduces the table
    Rejected,     ///< solver output could not be verified
    Error         ///< invalid input or solver exception
};

inline std::string to_string(CertOutcome o) {
    switch (o) {
    case CertOutcome::Certified:
        return "certified";
    case CertOutcome::Inconsistent:
        return "inconsistent";
    case CertOutcome::Rejected:
        return "rejected";
    case CertOutcome::Error:
        return "error";
    }
    return "unknown";
}

inline CertOutcome cert_outcome_from_string(const std::string &s) {
    for (auto o : {CertOutcome::Certified, CertOutcome::Inconsistent, CertOutcome::Rejected, CertOutcome::Error})
        if (to_string(o) == s)
            return o;
    throw DomainError("unknown certification status '" + s + "'");
}

struct CertifyOptions {
    SolveOptions solver;
    /// Use the permutation-reduced program whenever the table allows it.
    bool use_symmetry = true;
    double symmetry_tol = 1e-9;
    /// Largest relative primal residual accepted as "the data are reproducible".
    double consistency_tol = 1e-4;
    std::size_t strategy_cap = default_strategy_cap;
    std::size_t orbit_cap = default_orbit_cap;
    /// Per-entry slack s(x,b); empty means exact data constraints.
    Matrix slack;
};

struct CertResult {
    CertOutcome outcome = CertOutcome::Error;
    double p_guess = 1.0;
    double h_min = 0.0;
    double mu = 0.0;
    OverlapKind model = OverlapKind::EnergyBound;
    double delta = 1.0;
    /// Largest per-entry slack applied to the data constraints.
    double slack_used = 0.0;
    SolveStatus solver_status = SolveStatus::NumericalFailure;
    double primal_value = 0.0;
    double dual_value = 0.0;
    double gap = 0.0;
    double primal_infeasibility = 0.0;
    int iterations = 0;
    bool reduced = false;
    bool analytic = false;
    std::string message;
    CertifiedBound certificate;

    [[nodiscard]] bool certified() const { return outcome == CertOutcome::Certified; }
};

/// Slack from binomial standard errors: s = sigma * sqrt(max(p(1-p), 1/N) / N).
/// The 1/N floor keeps entries with zero observed counts from being pinned.
inline Matrix slack_from_counts(const EmpiricalTable &data, double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw DomainError("slack sigma must be finite and non-negative");
    const Matrix &p = data.table.matrix();
    Matrix s(p.rows(), p.cols());
    for (Eigen::Index x = 0; x < p.rows(); ++x) {
        const auto total = static_cast<double>(data.row_total(static_cast<int>(x)));
        for (Eigen::Index b = 0; b < p.cols(); ++b) {
            const double v = std::max(p(x, b) * (1.0 - p(x, b)), 1.0 / total);
            s(x, b) = sigma * std::sqrt(v / total);
        }
    }
    return s;
}

namespace detail {

inline CertResult fail_closed(CertResult r, CertOutcome outcome, std::string message) {
    r.outcome = outcome;
    r.p_guess = 1.0;
    r.h_min = 0.0;
    r.message = std::move(message);
    return r;
}

/// (1/n) sum_x max_b max(p - s, 0): any table inside the slack box is at
/// least this guessable, so a smaller certified value means infeasibility.
inline double deterministic_floor(const ProbTable &table, const Matrix &slack) {
    double acc = 0.0;
    for (int x = 0; x < table.n(); ++x) {
        double best = 0.0;
        for (int b = 0; b < table.d(); ++b) {
            const double s = slack.size() == 0 ? 0.0 : slack(x, b);
            best = std::max(best, table(x, b) - s);
        }
        acc += best;
    }
    return acc / table.n();
}

} // namespace detail

/// Certified guessing probability and min-entropy for `table` under an
/// energy (or overlap) bound `mu`.
inline CertResult certify(const ProbTable &table, double mu, OverlapKind kind, const CertifyOptions &options = {}) {
    CertResult r;
    r.mu = mu;
    r.model = kind;
    try {
        options.solver.validate();
        r.delta = overlap_from_model(kind, mu);
        const Matrix &slack = options.slack;
        if (slack.size() != 0) {
            if (slack.rows() != table.n() || slack.cols() != table.d())
                throw DimensionError("slack matrix must match the table shape");
            if ((slack.array() < 0.0).any() || !slack.allFinite())
                throw DomainError("slack entries must be finite and non-negative");
            r.slack_used = slack.maxCoeff();
        }

        const StateFamily states = build_states(table.n(), r.delta);
        const bool symmetric = options.use_symmetry && r.slack_used == 0.0 && table.d() == table.n() + 1 &&
                               table_is_symmetric(table, options.symmetry_tol);
        auto solve_full = [&] {
            const SdpPair pair = assemble(states, table, slack, options.strategy_cap);
            return solve(pair.primal, pair.dual, options.solver);
        };
        Solution sol;
        r.reduced = symmetric;
        if (symmetric) {
            const SdpPair pair = assemble_reduced(states, table, options.symmetry_tol, options.orbit_cap);
            sol = solve(pair.primal, pair.dual, options.solver);
            // The reduced program can stall next to the kink of the h_min(mu)
            // curve; the full program is better conditioned there.
            const bool usable = sol.analytic || (sol.primal_infeasibility <= options.consistency_tol &&
                                                 sol.certificate.accepted);
            if (!usable && sol.status != SolveStatus::Infeasible &&
                detail::checked_power(table.d(), table.n(), options.strategy_cap) <= options.strategy_cap) {
                sol = solve_full();
                r.reduced = false;
            }
        } else {
            sol = solve_full();
        }
        r.solver_status = sol.status;
        r.primal_value = sol.primal_value;
        r.dual_value = sol.dual_value;
        r.gap = sol.gap;
        r.primal_infeasibility = sol.primal_infeasibility;
        r.iterations = sol.iterations;
        r.analytic = sol.analytic;
        r.certificate = sol.certificate;

        if (sol.status == SolveStatus::Infeasible)
            return detail::fail_closed(r, CertOutcome::Inconsistent, "solver detected an infeasible data table");
        // A dual bound for an empty primal is vacuous, so the data must be
        // reproduced to within the tolerance before any bound is reported.
        if (!sol.analytic && !(sol.primal_infeasibility <= options.consistency_tol))
            return detail::fail_closed(r, CertOutcome::Inconsistent,
                                       "no measurement on states with this overlap reproduces the table (relative "
                                       "residual " +
                                           std::to_string(sol.primal_infeasibility) + ")");
        if (!sol.certificate.accepted)
            return detail::fail_closed(r, CertOutcome::Rejected,
                                       "dual certificate failed verification (" + to_string(sol.status) + ")");
        const double floor = detail::deterministic_floor(table, slack);
        if (sol.value < floor - 1e-9)
            return detail::fail_closed(r, CertOutcome::Inconsistent,
                                       "certified bound lies below the deterministic floor; table is "
                                       "inconsistent with the overlap bound");
        r.outcome = CertOutcome::Certified;
        r.p_guess = std::min(sol.value, 1.0);
        r.h_min = hmin_from_pguess(r.p_guess);
        return r;
    } catch (const Error &e) {
        return detail::fail_closed(r, CertOutcome::Error, e.what());
    }
}

/// Re-verify a full-program dual point against another table at the same
/// overlap. The LMI blocks do not depend on the data, so this costs one
/// eigenvalue pass per block and no optimization. Only the deterministic
/// floor guards against inconsistent data here; certify() checks more.
inline CertResult reuse_certificate(const DualPoint &point, const ProbTable &table, double mu, OverlapKind kind,
                                    const CertifyOptions &options = {}) {
    CertResult r;
    r.mu = mu;
    r.model = kind;
    try {
        r.delta = overlap_from_model(kind, mu);
        const Matrix &slack = options.slack;
        if (slack.size() != 0)
            r.slack_used = slack.maxCoeff();
        const DualProblem dual = assemble_dual(build_states(table.n(), r.delta), table, slack);
        if (point.nu.rows() != table.n() || point.nu.cols() != table.d() ||
            point.h.size() != dual.program().strategies().size())
            throw DimensionError("certificate shape does not match the table");
        r.certificate = certify_dual_bound(dual, point, options.solver.feas_tol);
        r.solver_status = SolveStatus::Optimal;
        r.dual_value = r.certificate.raw_value;
        if (!r.certificate.accepted)
            return detail::fail_closed(r, CertOutcome::Rejected, "reused certificate failed verification");
        if (r.certificate.value < detail::deterministic_floor(table, slack) - 1e-9)
            return detail::fail_closed(r, CertOutcome::Inconsistent,
                                       "certified bound lies below the deterministic floor");
        r.outcome = CertOutcome::Certified;
        r.p_guess = std::min(r.certificate.value, 1.0);
        r.h_min = hmin_from_pguess(r.p_guess);
        return r;
    } catch (const Error &e) {
        return detail::fail_closed(r, CertOutcome::Error, e.what());
    }
}

// ---------------------------------------------------------------- sweeps --

struct SweepPoint {
    double value = 0.0;
    CertResult result;
    /// Optimal mu for points produced by an inner maximization.
    double mu_star = std::numeric_limits<double>::quiet_NaN();
};

struct SweepCurve {
    std::string axis;
    std::vector<SweepPoint> points;

    [[nodiscard]] std::size_t argmax() const {
        if (points.empty())
            throw DomainError("empty curve");
        std::size_t best = 0;
        for (std::size_t i = 1; i < points.size(); ++i)
            if (points[i].result.h_min > points[best].result.h_min)
                best = i;
        return best;
    }
};

namespace detail {
inline void require_increasing(const std::vector<double> &grid) {
    if (grid.empty())
        throw DomainError("sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw DomainError("sweep grid must be strictly increasing");
}

inline CertResult certify_model(const ExperimentParams &params, OverlapKind kind, const CertifyOptions &options) {
    try {
        return certify(model_table(params), params.mu, kind, options);
    } catch (const Error &e) {
        CertResult r;
        r.mu = params.mu;
        r.model = kind;
        return fail_closed(r, CertOutcome::Error, e.what());
    }
}
} // namespace detail

/// Certify the model table at every mu of `grid`.
inline SweepCurve sweep_mu(const ExperimentParams &base, const std::vector<double> &grid, OverlapKind kind,
                           const CertifyOptions &options = {}) {
    detail::require_increasing(grid);
    SweepCurve curve{"mu", {}};
    for (double mu : grid) {
        ExperimentParams p = base;
        p.mu = mu;
        curve.points.push_back({mu, detail::certify_model(p, kind, options)});
    }
    return curve;
}

struct OptimalMu {
    double mu = 0.0;
    double h_min = 0.0;
    CertResult result;
    int evaluations = 0;
    bool grid_fallback = false;
};

struct OptimalMuOptions {
    double lo = 0.02;
    double hi = 0.5;
    double tol = 1e-3;
    int prescan_points = 10;
};

/// Table observed at a given mu; lets optimal_mu run on any detection model.
using TableAtMu = std::function<ProbTable(double)>;

/// Maximize h_min over mu. A coarse pre-scan checks the unimodality that the
/// golden-section search relies on; otherwise a grid at spacing `tol` is used.
inline OptimalMu optimal_mu(const TableAtMu &table_at, OverlapKind kind, const OptimalMuOptions &search = {},
                            const CertifyOptions &options = {}) {
    if (!(search.lo >= 0.0) || !(search.hi > search.lo) || !(search.tol > 0.0) || search.prescan_points < 3)
        throw DomainError("optimal_mu needs 0 <= lo < hi, tol > 0 and at least three pre-scan points");

    OptimalMu best;
    best.h_min = -1.0;
    auto eval = [&](double mu) {
        CertResult r;
        try {
            r = certify(table_at(mu), mu, kind, options);
        } catch (const Error &e) {
            r.mu = mu;
            r.model = kind;
            r = detail::fail_closed(r, CertOutcome::Error, e.what());
        }
        ++best.evaluations;
        const double h = r.h_min;
        if (h > best.h_min) {
            best.mu = mu;
            best.h_min = h;
            best.result = r;
        }
        return h;
    };

    const int k = search.prescan_points;
    std::vector<double> mus(static_cast<std::size_t>(k)), hs(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        mus[i] = search.lo + (search.hi - search.lo) * i / (k - 1);
        hs[i] = eval(mus[i]);
    }
    const auto top = static_cast<int>(std::max_element(hs.begin(), hs.end()) - hs.begin());
    bool unimodal = true;
    constexpr double flat = 1e-9;
    for (int i = 1; i <= top; ++i)
        unimodal = unimodal && hs[i] >= hs[i - 1] - flat;
    for (int i = top + 1; i < k; ++i)
        unimodal = unimodal && hs[i] <= hs[i - 1] + flat;
    if (hs[top] <= 0.0)
        return best; // nothing to certify anywhere in the bracket

    if (!unimodal) {
        best.grid_fallback = true;
        const int steps = static_cast<int>(std::min(1000.0, std::ceil((search.hi - search.lo) / search.tol)));
        for (int i = 0; i <= steps; ++i)
            eval(search.lo + (search.hi - search.lo) * i / steps);
        return best;
    }

    double a = mus[static_cast<std::size_t>(std::max(top - 1, 0))];
    double b = mus[static_cast<std::size_t>(std::min(top + 1, k - 1))];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    while (b - a > search.tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d);
        }
    }
    return best;
}

inline OptimalMu optimal_mu(const ExperimentParams &base, OverlapKind kind, const OptimalMuOptions &search = {},
                            const CertifyOptions &options = {}) {
    return optimal_mu(
        [&](double mu) {
            ExperimentParams p = base;
            p.mu = mu;
            return model_table(p);
        },
        kind, search, options);
}

/// Best h_min over mu for each detector efficiency in `grid`.
inline SweepCurve sweep_efficiency(const ExperimentParams &base, const std::vector<double> &grid, OverlapKind kind,
                                   const OptimalMuOptions &search = {}, const CertifyOptions &options = {}) {
    detail::require_increasing(grid);
    SweepCurve curve{"eta", {}};
    for (double eta : grid) {
        ExperimentParams p = base;
        p.eta = eta;
        SweepPoint pt;
        pt.value = eta;
        try {
            p.validate();
            const OptimalMu opt = optimal_mu(p, kind, search, options);
            pt.result = opt.result;
            pt.mu_star = opt.mu;
        } catch (const Error &e) {
            pt.result = detail::fail_closed(CertResult{}, CertOutcome::Error, e.what());
        }
        curve.points.push_back(std::move(pt));
    }
    return curve;
}

/// Best h_min over mu for each number of time bins (Config I only).
inline SweepCurve sweep_inputs(const ExperimentParams &base, const std::vector<int> &inputs, OverlapKind kind,
                               const OptimalMuOptions &search = {}, const CertifyOptions &options = {}) {
    std::vector<double> grid(inputs.begin(), inputs.end());
    detail::require_increasing(grid);
    if (base.config != Configuration::ConfigI)
        throw DomainError("input-count sweeps are defined for Config I");
    SweepCurve curve{"n_inputs", {}};
    for (int n : inputs) {
        ExperimentParams p = base;
        p.n_inputs = n;
        SweepPoint pt;
        pt.value = n;
        try {
            p.validate();
            const OptimalMu opt = optimal_mu(p, kind, search, options);
            pt.result = opt.result;
            pt.mu_star = opt.mu;
        } catch (const Error &e) {
            pt.result = detail::fail_closed(CertResult{}, CertOutcome::Error, e.what());
        }
        curve.points.push_back(std::move(pt));
    }
    return curve;
}

// ----------------------------------------------------------- CSV curves --

inline constexpr const char *curve_csv_header = "axis,value,h_min,p_guess,status,slack";

inline void write_curve_csv(std::ostream &os, const SweepCurve &curve) {
    os << curve_csv_header << '\n';
    char buf[256];
    for (const auto &pt : curve.points) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%s,%.17g\n", curve.axis.c_str(), pt.value,
                      pt.result.h_min, pt.result.p_guess, to_string(pt.result.outcome).c_str(), pt.result.slack_used);
        os << buf;
    }
}

/// Inverse of write_curve_csv. Only the exported columns are restored.
inline SweepCurve read_curve_csv(std::istream &is) {
    std::string line;
    if (!std::getline(is, line) || line != curve_csv_header)
        throw ParseError("missing or unexpected curve header", 1);
    SweepCurve curve;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cols.push_back(cell);
        if (cols.size() != 6)
            throw ParseError("expected 6 columns", lineno);
        if (curve.points.empty())
            curve.axis = cols[0];
        else if (cols[0] != curve.axis)
            throw ParseError("mixed axes in one curve", lineno);
        SweepPoint pt;
        try {
            std::size_t used = 0;
            auto num = [&](const std::string &s) {
                const double v = std::stod(s, &used);
                if (used != s.size())
                    throw std::invalid_argument(s);
                return v;
            };
            pt.value = num(cols[1]);
            pt.result.h_min = num(cols[2]);
            pt.result.p_guess = num(cols[3]);
            pt.result.outcome = cert_outcome_from_string(cols[4]);
            pt.result.slack_used = num(cols[5]);
        } catch (const std::exception &) {
            throw ParseError("malformed number or status", lineno);
        }
        if (curve.axis == "mu")
            pt.result.mu = pt.value;
        curve.points.push_back(std::move(pt));
    }
    return curve;
}

// ------------------------------------------------------- energy monitor --

struct PowerRecord {
    int x = 0;
    /// Mean photon number estimated for one prepared state.
    double mean_photons = 0.0;
};

struct EnergyReport {
    bool pass = true;
    double mu = 0.0;
    /// Per input: count, worst (largest) estimate, smallest margin mu - estimate.
    std::vector<std::size_t> count;
    std::vector<double> worst;
    std::vector<double> min_margin;
    std::vector<double> mean_margin;
    /// Inputs with at least one estimate above mu.
    std::vector<int> offending;
};

/// Pass iff every record satisfies estimate <= mu.
inline EnergyReport check_energy_bound(const std::vector<PowerRecord> &records, double mu) {
    if (records.empty())
        throw DomainError("no power records supplied");
    int n = 0;
    for (const auto &r : records) {
        if (r.x < 0)
            throw DomainError("negative input symbol in power record");
        n = std::max(n, r.x + 1);
    }
    EnergyReport rep;
    rep.mu = mu;
    rep.count.assign(static_cast<std::size_t>(n), 0);
    rep.worst.assign(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
    rep.min_margin.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    rep.mean_margin.assign(static_cast<std::size_t>(n), 0.0);
    for (const auto &r : records) {
        const auto x = static_cast<std::size_t>(r.x);
        ++rep.count[x];
        rep.worst[x] = std::max(rep.worst[x], r.mean_photons);
        rep.min_margin[x] = std::min(rep.min_margin[x], mu - r.mean_photons);
        rep.mean_margin[x] += mu - r.mean_photons;
    }
    for (int x = 0; x < n; ++x) {
        const auto i = static_cast<std::size_t>(x);
        if (rep.count[i] > 0)
            rep.mean_margin[i] /= static_cast<double>(rep.count[i]);
        if (!(rep.worst[i] <= mu) && rep.count[i] > 0) {
            rep.pass = false;
            rep.offending.push_back(x);
        }
    }
    return rep;
}

/// Synthetic power-meter readings: x uniform, each reading Gaussian around
/// `source_mu` with relative spread `relative_noise`, clipped at zero.
inline std::vector<PowerRecord> simulate_power_records(int n, double source_mu, double relative_noise,
                                                       std::size_t count, std::uint64_t seed) {
    if (n < 1 || count < 1 || !(source_mu >= 0.0) || !(relative_noise >= 0.0))
        throw DomainError("invalid power-record simulation parameters");
    std::mt19937_64 rng(seed);
    std::vector<PowerRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const int x = std::min(n - 1, static_cast<int>(detail::unit_uniform(rng) * n));
        // Box-Muller from two portable uniforms.
        const double u1 = 1.0 - detail::unit_uniform(rng);
        const double u2 = detail::unit_uniform(rng);
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        out.push_back({x, std::max(0.0, source_mu * (1.0 + relative_noise * z))});
    }
    return out;
}

} // namespace sdqrng
