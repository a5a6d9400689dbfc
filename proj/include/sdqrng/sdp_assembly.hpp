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
 * @file sdp_assembly.hpp
 * @brief Guessing-probability SDP for n inputs and d outcomes.
 *
 * A strategy Lambda = (lambda_0, ..., lambda_{n-1}) records, for each input,
 * the outcome the adversary bets on. With the strategy weight absorbed into
 * the measurement operators M_b^Lambda the primal reads
 *
 *     max (1/n) sum_x sum_Lambda <psi_x| M_{lambda_x}^Lambda |psi_x>
 *     s.t. M_b^Lambda PSD,
 *          sum_b M_b^Lambda proportional to the identity,
 *          sum_Lambda <psi_x| M_b^Lambda |psi_x> = p(b|x),
 *
 * and the Lagrange dual is
 *
 *     min -sum_{b,x} nu_bx p(b|x)
 *     s.t. sum_x rho_x ((1/n) [lambda_x = b] + nu_bx) + H^Lambda - tr(H^Lambda)/n I  <= 0
 *
 * for every (Lambda, b). Both programs share a GuessingProgram; a reduced
 * program (symmetry orbits) uses the same interface with orbit weights.
 */
#pragma once

#include "sdqrng/detection_model.hpp"
#include "sdqrng/error.hpp"
#include "sdqrng/linalg.hpp"
#include "sdqrng/state_geometry.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <vector>

namespace sdqrng {

/// Outcome bet on for each input.
struct Strategy {
    std::vector<int> guess;

    [[nodiscard]] int n() const { return static_cast<int>(guess.size()); }
    friend auto operator<=>(const Strategy &, const Strategy &) = default;
};

inline constexpr std::size_t default_strategy_cap = 100000;

namespace detail {
inline std::size_t checked_power(int d, int n, std::size_t cap) {
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) {
        if (total > cap / static_cast<std::size_t>(d))
            return cap + 1;
        total *= static_cast<std::size_t>(d);
    }
    return total;
}

inline Strategy strategy_from_index(std::size_t index, int n, int d) {
    Strategy s{std::vector<int>(static_cast<std::size_t>(n))};
    for (int x = n - 1; x >= 0; --x) {
        s.guess[static_cast<std::size_t>(x)] = static_cast<int>(index % static_cast<std::size_t>(d));
        index /= static_cast<std::size_t>(d);
    }
    return s;
}
} // namespace detail

/// All d^n strategies in lexicographic order (lambda_0 most significant).
inline std::vector<Strategy> enumerate_strategies(int n, int d, std::size_t cap = default_strategy_cap) {
    if (n < 1 || n > 8)
        throw DomainError("number of inputs must lie in [1, 8]");
    if (d < 2 || d > 12)
        throw DomainError("number of outcomes must lie in [2, 12]");
    const std::size_t total = detail::checked_power(d, n, cap);
    if (total > cap)
        throw SizeError("d^n = " + std::to_string(d) + "^" + std::to_string(n) + " strategies exceed the cap of " +
                        std::to_string(cap) + "; use the symmetry reduction");
    std::vector<Strategy> out;
    out.reserve(total);
    for (std::size_t i = 0; i < total; ++i)
        out.push_back(detail::strategy_from_index(i, n, d));
    return out;
}

/// Dual variables: nu(x, b) multiplies the data constraint for p(b|x), and
/// one H per strategy multiplies its normalization constraint.
struct DualPoint {
    Matrix nu;
    std::vector<Matrix> h;
};

/// Everything the primal and dual programs share.
///
/// Blocks are indexed s * d + c for strategy s and outcome c. Coefficient
/// matrices live in `pool`: rho_x at [0, n), sum_x rho_x at n, and
/// sum_{y != c} rho_y at n + 1 + c.
class GuessingProgram {
  public:
    GuessingProgram(StateFamily states, ProbTable table, std::vector<Strategy> strategies,
                    std::vector<double> multiplicity, bool reduced, Matrix slack)
        : states_(std::move(states)), table_(std::move(table)), strategies_(std::move(strategies)),
          multiplicity_(std::move(multiplicity)), reduced_(reduced), slack_(std::move(slack)) {
        n_ = table_.n();
        d_ = table_.d();
        if (states_.n() != n_)
            throw DimensionError("state family has " + std::to_string(states_.n()) + " states but the table has " +
                                 std::to_string(n_) + " inputs");
        if (slack_.size() == 0)
            slack_ = Matrix::Zero(n_, d_);
        if (slack_.rows() != n_ || slack_.cols() != d_)
            throw DimensionError("slack matrix must match the table shape");
        if ((slack_.array() < 0.0).any())
            throw DomainError("slack must be non-negative");
        if (reduced_ && d_ != n_ + 1)
            throw DimensionError("reduced programs need d = n + 1");
        for (const auto &s : strategies_)
            if (s.n() != n_)
                throw DimensionError("strategy length does not match the number of inputs");

        pool_.reserve(static_cast<std::size_t>(2 * n_ + 1));
        Matrix total = Matrix::Zero(n_, n_);
        for (int x = 0; x < n_; ++x) {
            pool_.push_back(states_.projector(x));
            total += pool_.back();
        }
        pool_.push_back(total);
        for (int c = 0; c < n_; ++c)
            pool_.push_back(total - pool_[static_cast<std::size_t>(c)]);
    }

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] int d() const noexcept { return d_; }
    [[nodiscard]] const StateFamily &states() const noexcept { return states_; }
    [[nodiscard]] const ProbTable &table() const noexcept { return table_; }
    [[nodiscard]] const std::vector<Strategy> &strategies() const noexcept { return strategies_; }
    [[nodiscard]] const std::vector<double> &multiplicity() const noexcept { return multiplicity_; }
    [[nodiscard]] bool reduced() const noexcept { return reduced_; }
    [[nodiscard]] const Matrix &slack() const noexcept { return slack_; }
    [[nodiscard]] bool has_slack() const { return (slack_.array() > 0.0).any(); }
    [[nodiscard]] const std::vector<Matrix> &pool() const noexcept { return pool_; }
    [[nodiscard]] std::size_t block_count() const { return strategies_.size() * static_cast<std::size_t>(d_); }
    [[nodiscard]] std::size_t block_index(std::size_t s, int c) const {
        return s * static_cast<std::size_t>(d_) + static_cast<std::size_t>(c);
    }

    /// Objective coefficient of block (s, c) as pool terms.
    template <class F> void for_each_objective_term(std::size_t s, int c, F &&f) const {
        const double w = multiplicity_[s] / n_;
        const auto &g = strategies_[s].guess;
        for (int y = 0; y < n_; ++y)
            if (g[static_cast<std::size_t>(y)] == c)
                f(static_cast<std::size_t>(y), w);
    }

    /// Coefficient of block (s, c) in the data functional for (x, b):
    /// calls f(x, b, pool_index, scale) for every non-zero term.
    template <class F> void for_each_data_term(std::size_t s, int c, F &&f) const {
        if (!reduced_) {
            for (int x = 0; x < n_; ++x)
                f(x, c, static_cast<std::size_t>(x), 1.0);
            return;
        }
        // Orbit-averaged coefficients: (1/|Stab|) sum_{h : h(b) = c} rho_{h(x)}.
        const double orbit = multiplicity_[s];
        const int inconclusive = n_;
        if (c == inconclusive) {
            for (int x = 0; x < n_; ++x)
                f(x, inconclusive, static_cast<std::size_t>(n_), orbit / n_);
            return;
        }
        for (int x = 0; x < n_; ++x) {
            f(x, x, static_cast<std::size_t>(c), orbit / n_);
            for (int b = 0; b < n_; ++b)
                if (b != x)
                    f(x, b, static_cast<std::size_t>(n_ + 1 + c), orbit / (n_ * (n_ - 1.0)));
        }
    }

    [[nodiscard]] Matrix objective_block(std::size_t s, int c) const {
        Matrix out = Matrix::Zero(n_, n_);
        for_each_objective_term(s, c, [&](std::size_t k, double w) { out += w * pool_[k]; });
        return out;
    }

    /// Sum over all (x, b) of the data coefficients of block (s, c). Shifting
    /// every nu_bx by -t moves the block's LMI by -t times this matrix.
    [[nodiscard]] Matrix data_coefficient_sum(std::size_t s, int c) const {
        Matrix out = Matrix::Zero(n_, n_);
        for_each_data_term(s, c, [&](int, int, std::size_t k, double w) { out += w * pool_[k]; });
        return out;
    }

  private:
    int n_ = 0;
    int d_ = 0;
    StateFamily states_;
    ProbTable table_;
    std::vector<Strategy> strategies_;
    std::vector<double> multiplicity_;
    bool reduced_ = false;
    Matrix slack_;
    std::vector<Matrix> pool_;
};

using ProgramPtr = std::shared_ptr<const GuessingProgram>;

/// Block-diagonal point of the primal: one n x n matrix per (strategy, outcome).
using PrimalPoint = std::vector<Matrix>;

class PrimalProblem {
  public:
    explicit PrimalProblem(ProgramPtr program) : program_(std::move(program)) {}

    [[nodiscard]] const GuessingProgram &program() const { return *program_; }
    [[nodiscard]] const ProgramPtr &shared() const { return program_; }

    [[nodiscard]] std::size_t variable_count() const { return program_->block_count(); }
    [[nodiscard]] std::size_t data_constraint_count() const {
        return static_cast<std::size_t>(program_->n() * program_->d());
    }
    /// One matrix equality sum_b M_b proportional to I per strategy.
    [[nodiscard]] std::size_t normalization_constraint_count() const { return program_->strategies().size(); }

    [[nodiscard]] double objective(const PrimalPoint &m) const {
        const auto &p = *program_;
        check(m);
        double v = 0.0;
        for (std::size_t s = 0; s < p.strategies().size(); ++s)
            for (int c = 0; c < p.d(); ++c)
                p.for_each_objective_term(s, c, [&](std::size_t k, double w) {
                    v += w * linalg::dot(p.pool()[k], m[p.block_index(s, c)]);
                });
        return v;
    }

    /// Values of the data functionals, arranged as an n x d table.
    [[nodiscard]] Matrix data_values(const PrimalPoint &m) const {
        const auto &p = *program_;
        check(m);
        Matrix out = Matrix::Zero(p.n(), p.d());
        for (std::size_t s = 0; s < p.strategies().size(); ++s)
            for (int c = 0; c < p.d(); ++c)
                p.for_each_data_term(s, c, [&](int x, int b, std::size_t k, double w) {
                    out(x, b) += w * linalg::dot(p.pool()[k], m[p.block_index(s, c)]);
                });
        return out;
    }

    /// Largest entry of sum_b M_b - tr(sum_b M_b)/n I over all strategies.
    [[nodiscard]] double normalization_residual(const PrimalPoint &m) const {
        const auto &p = *program_;
        check(m);
        double worst = 0.0;
        for (std::size_t s = 0; s < p.strategies().size(); ++s) {
            Matrix total = Matrix::Zero(p.n(), p.n());
            for (int c = 0; c < p.d(); ++c)
                total += m[p.block_index(s, c)];
            total.diagonal().array() -= total.trace() / p.n();
            worst = std::max(worst, total.cwiseAbs().maxCoeff());
        }
        return worst;
    }

  private:
    void check(const PrimalPoint &m) const {
        if (m.size() != program_->block_count())
            throw DimensionError("primal point has the wrong number of blocks");
    }
    ProgramPtr program_;
};

class DualProblem {
  public:
    explicit DualProblem(ProgramPtr program) : program_(std::move(program)) {}

    [[nodiscard]] const GuessingProgram &program() const { return *program_; }
    [[nodiscard]] const ProgramPtr &shared() const { return program_; }

    [[nodiscard]] std::size_t lmi_block_count() const { return program_->block_count(); }

    [[nodiscard]] DualPoint zero_point() const {
        const auto &p = *program_;
        return {Matrix::Zero(p.n(), p.d()),
                std::vector<Matrix>(p.strategies().size(), Matrix::Zero(p.n(), p.n()))};
    }

    /// Left-hand side of the LMI for (strategy s, outcome c); feasible iff NSD.
    [[nodiscard]] Matrix lmi_block(const DualPoint &pt, std::size_t s, int c) const {
        const auto &p = *program_;
        check(pt);
        Matrix out = p.objective_block(s, c);
        p.for_each_data_term(s, c, [&](int x, int b, std::size_t k, double w) {
            out += (w * pt.nu(x, b)) * p.pool()[k];
        });
        const Matrix &h = pt.h[s];
        out += h;
        out.diagonal().array() -= h.trace() / p.n();
        return out;
    }

    /// -sum nu_bx p(b|x) + sum slack_bx |nu_bx|. The second term makes the
    /// value an upper bound for every table within the slack box.
    [[nodiscard]] double objective(const DualPoint &pt) const {
        const auto &p = *program_;
        check(pt);
        return -(pt.nu.cwiseProduct(p.table().matrix())).sum() + (pt.nu.cwiseAbs().cwiseProduct(p.slack())).sum();
    }

    /// Same certificate evaluated against another table (LMIs do not depend on p).
    [[nodiscard]] double objective_for(const DualPoint &pt, const Matrix &table, const Matrix &slack) const {
        check(pt);
        if (table.rows() != pt.nu.rows() || table.cols() != pt.nu.cols())
            throw DimensionError("table shape does not match the certificate");
        double v = -(pt.nu.cwiseProduct(table)).sum();
        if (slack.size() != 0)
            v += (pt.nu.cwiseAbs().cwiseProduct(slack)).sum();
        return v;
    }

  private:
    void check(const DualPoint &pt) const {
        const auto &p = *program_;
        if (pt.nu.rows() != p.n() || pt.nu.cols() != p.d() || pt.h.size() != p.strategies().size())
            throw DimensionError("dual point dimensions do not match the program");
    }
    ProgramPtr program_;
};

struct SdpPair {
    PrimalProblem primal;
    DualProblem dual;
};

inline ProgramPtr make_full_program(const StateFamily &states, const ProbTable &table, const Matrix &slack = {},
                                    std::size_t cap = default_strategy_cap) {
    if (states.n() != table.n())
        throw DimensionError("state family and table disagree on the number of inputs");
    auto strategies = enumerate_strategies(table.n(), table.d(), cap);
    std::vector<double> mult(strategies.size(), 1.0);
    return std::make_shared<const GuessingProgram>(states, table, std::move(strategies), std::move(mult), false,
                                                   slack);
}

inline PrimalProblem assemble_primal(const StateFamily &states, const ProbTable &table, const Matrix &slack = {}) {
    return PrimalProblem(make_full_program(states, table, slack));
}

inline DualProblem assemble_dual(const StateFamily &states, const ProbTable &table, const Matrix &slack = {}) {
    return DualProblem(make_full_program(states, table, slack));
}

inline SdpPair assemble(const StateFamily &states, const ProbTable &table, const Matrix &slack = {},
                        std::size_t cap = default_strategy_cap) {
    auto prog = make_full_program(states, table, slack, cap);
    return {PrimalProblem(prog), DualProblem(prog)};
}

// ---------------------------------------------------------------------------
// Symmetry reduction
// ---------------------------------------------------------------------------

inline constexpr std::size_t default_orbit_cap = 5'000'000;

struct Orbit {
    Strategy representative;
    double size = 1.0;
};

/// Orbits of [d]^n under the symmetric group relabelling inputs and
/// conclusive outcomes together: (g.Lambda)_{g(x)} = g(lambda_x), with the
/// inconclusive outcome n fixed. Requires d = n + 1.
inline std::vector<Orbit> strategy_orbits(int n, std::size_t cap = default_orbit_cap) {
    const int d = n + 1;
    if (n < 2 || n > 8)
        throw DomainError("symmetry reduction supports 2 <= n <= 8");
    const std::size_t total = detail::checked_power(d, n, cap);
    if (total > cap)
        throw SizeError("too many strategies to group into orbits");

    std::vector<std::uint32_t> parent(total);
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](std::uint32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    auto unite = [&](std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    };

    // Generators of S_n: the transposition (0 1) and the cycle x -> x+1.
    std::vector<std::vector<int>> gens;
    {
        std::vector<int> swap01(static_cast<std::size_t>(n));
        std::iota(swap01.begin(), swap01.end(), 0);
        std::swap(swap01[0], swap01[1]);
        std::vector<int> cycle(static_cast<std::size_t>(n));
        for (int x = 0; x < n; ++x)
            cycle[static_cast<std::size_t>(x)] = (x + 1) % n;
        gens = {swap01, cycle};
    }
    std::vector<std::size_t> pow(static_cast<std::size_t>(n));
    for (int x = n - 1, acc = 1; x >= 0; --x, acc *= d)
        pow[static_cast<std::size_t>(x)] = static_cast<std::size_t>(acc);

    std::vector<int> digits(static_cast<std::size_t>(n));
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        for (int x = n - 1; x >= 0; --x) {
            digits[static_cast<std::size_t>(x)] = static_cast<int>(rem % static_cast<std::size_t>(d));
            rem /= static_cast<std::size_t>(d);
        }
        for (const auto &g : gens) {
            std::size_t image = 0;
            for (int x = 0; x < n; ++x) {
                const int v = digits[static_cast<std::size_t>(x)];
                const int gv = v == n ? n : g[static_cast<std::size_t>(v)];
                image += static_cast<std::size_t>(gv) * pow[static_cast<std::size_t>(g[static_cast<std::size_t>(x)])];
            }
            unite(static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(image));
        }
    }

    std::vector<std::size_t> size(total, 0);
    for (std::size_t idx = 0; idx < total; ++idx)
        ++size[find(static_cast<std::uint32_t>(idx))];
    std::vector<Orbit> out;
    for (std::size_t idx = 0; idx < total; ++idx)
        if (parent[idx] == idx)
            out.push_back({detail::strategy_from_index(idx, n, d), static_cast<double>(size[idx])});
    return out;
}

/// True when p(g(b)|g(x)) = p(b|x) for every relabelling g, within tol.
inline bool table_is_symmetric(const ProbTable &table, double tol = 1e-9) {
    const int n = table.n();
    if (table.d() != n + 1)
        return false;
    const double diag = table(0, 0);
    const double off = n > 1 ? table(0, 1) : 0.0;
    const double inc = table(0, n);
    for (int x = 0; x < n; ++x) {
        if (std::abs(table(x, n) - inc) > tol)
            return false;
        for (int b = 0; b < n; ++b)
            if (std::abs(table(x, b) - (b == x ? diag : off)) > tol)
                return false;
    }
    return true;
}

/// Collapse a full program onto strategy orbits. The optimum is unchanged when
/// the table is symmetric; otherwise the reduction is refused.
inline SdpPair reduce_by_symmetry(const PrimalProblem &problem, double tol = 1e-9,
                                  std::size_t cap = default_orbit_cap) {
    const auto &p = problem.program();
    if (p.reduced())
        return {problem, DualProblem(problem.shared())};
    if (p.d() != p.n() + 1)
        throw DomainError("symmetry reduction needs d = n + 1 (one inconclusive outcome)");
    if (!table_is_symmetric(p.table(), tol))
        throw DomainError("table is not invariant under joint input/outcome relabelling; reduction refused");
    if (p.has_slack())
        throw DomainError("symmetry reduction does not support slack");
    auto orbits = strategy_orbits(p.n(), cap);
    std::vector<Strategy> reps;
    std::vector<double> mult;
    reps.reserve(orbits.size());
    mult.reserve(orbits.size());
    for (auto &o : orbits) {
        reps.push_back(std::move(o.representative));
        mult.push_back(o.size);
    }
    auto prog = std::make_shared<const GuessingProgram>(p.states(), p.table(), std::move(reps), std::move(mult), true,
                                                        Matrix());
    return {PrimalProblem(prog), DualProblem(prog)};
}

/// Same as above, starting from states and table without building the full
/// strategy list (which may exceed the full-enumeration cap).
inline SdpPair assemble_reduced(const StateFamily &states, const ProbTable &table, double tol = 1e-9,
                                std::size_t cap = default_orbit_cap) {
    if (states.n() != table.n())
        throw DimensionError("state family and table disagree on the number of inputs");
    if (table.d() != table.n() + 1)
        throw DomainError("symmetry reduction needs d = n + 1 (one inconclusive outcome)");
    if (!table_is_symmetric(table, tol))
        throw DomainError("table is not invariant under joint input/outcome relabelling; reduction refused");
    auto orbits = strategy_orbits(table.n(), cap);
    std::vector<Strategy> reps;
    std::vector<double> mult;
    for (auto &o : orbits) {
        reps.push_back(std::move(o.representative));
        mult.push_back(o.size);
    }
    auto prog =
        std::make_shared<const GuessingProgram>(states, table, std::move(reps), std::move(mult), true, Matrix());
    return {PrimalProblem(prog), DualProblem(prog)};
}

} // namespace sdqrng
