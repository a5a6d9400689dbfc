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
 * @file block_sdp.hpp
 * @brief Primal-dual interior-point method for SDPs over many small blocks.
 *
 * Solves
 *
 *     maximize   sum_j <C_j, X_j>
 *     subject to sum_j <A_kj, X_j> = b_k,   X_j PSD,
 *
 * together with its dual
 *
 *     minimize   b^T y
 *     subject to Z_j = sum_k y_k A_kj - C_j  PSD.
 *
 * Constraints come in two kinds. Local groups touch pairwise disjoint sets of
 * blocks, so their part of the Schur complement is block diagonal; coupling
 * constraints may touch anything. The Schur complement then has arrow shape
 * and is solved by eliminating the local groups first, which keeps the cost
 * per iteration linear in the number of blocks.
 *
 * Search direction: HKM with Mehrotra predictor-corrector, infeasible start.
 */
#pragma once

#include "sdqrng/error.hpp"
#include "sdqrng/linalg.hpp"

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace sdqrng::sdp {

/// scale * <pool[matrix], X_block>
struct Term {
    std::size_t block = 0;
    std::size_t matrix = 0;
    double scale = 1.0;
};

struct LinearConstraint {
    std::vector<Term> terms;
    double rhs = 0.0;
};

struct BlockProblem {
    std::vector<int> block_sizes;
    /// Coefficient matrices shared between terms; all symmetric.
    std::vector<Matrix> pool;
    /// Objective terms; a block may appear several times or not at all.
    std::vector<Term> objective;
    std::vector<std::vector<LinearConstraint>> groups;
    std::vector<LinearConstraint> coupling;

    [[nodiscard]] std::size_t constraint_count() const {
        std::size_t m = coupling.size();
        for (const auto &g : groups)
            m += g.size();
        return m;
    }
};

enum class Status { Optimal, MaxIters, Stalled, Infeasible, NumericalFailure };

inline std::string to_string(Status s) {
    switch (s) {
    case Status::Optimal:
        return "optimal";
    case Status::MaxIters:
        return "max_iters";
    case Status::Stalled:
        return "stalled";
    case Status::Infeasible:
        return "infeasible";
    case Status::NumericalFailure:
        return "numerical_failure";
    }
    return "unknown";
}

struct Options {
    double gap_tol = 1e-8;
    double feas_tol = 1e-9;
    int max_iters = 200;
    /// A verified dual objective below this proves primal infeasibility.
    double primal_lower_bound = -std::numeric_limits<double>::infinity();
    double step_fraction = 0.98;
    bool verbose = false;
};

struct Result {
    Status status = Status::NumericalFailure;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    int iterations = 0;
    std::vector<Matrix> x;
    std::vector<Matrix> z;
    /// Ordered as the problem lists them: group 0, group 1, ..., then coupling.
    Vector y;
};

namespace detail {

struct Incidence {
    std::size_t constraint; // global index
    std::size_t matrix;
    double scale;
};

class Solver {
  public:
    Solver(const BlockProblem &problem, const Options &options) : p_(problem), opt_(options) { setup(); }

    Result run();

  private:
    void setup();
    [[nodiscard]] Vector apply_a(const std::vector<Matrix> &x) const;
    void apply_at(const Vector &y, std::vector<Matrix> &out) const;
    bool factor_schur();
    [[nodiscard]] Vector solve_schur(const Vector &rhs) const;
    [[nodiscard]] double max_step(const std::vector<Matrix> &x, const std::vector<Matrix> &dx) const;
    [[nodiscard]] double merit_of(const Result &r) const {
        const double rel_gap = std::abs(r.primal_objective - r.dual_objective) /
                               (1.0 + std::abs(r.primal_objective) + std::abs(r.dual_objective));
        return std::max({rel_gap / opt_.gap_tol, r.primal_infeasibility / opt_.feas_tol,
                         r.dual_infeasibility / opt_.feas_tol});
    }
    [[nodiscard]] double inner(const std::vector<Matrix> &a, const std::vector<Matrix> &b) const {
        double s = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j)
            s += linalg::dot(a[j], b[j]);
        return s;
    }

    const BlockProblem &p_;
    Options opt_;

    std::size_t nblocks_ = 0;
    std::size_t m_ = 0;
    std::size_t m_local_ = 0;
    std::size_t m_coupling_ = 0;
    std::vector<std::size_t> group_offset_;
    std::vector<int> constraint_group_; // -1 for coupling
    std::vector<std::vector<Incidence>> incidence_;
    std::vector<int> block_group_;
    Vector b_;
    std::vector<Matrix> c_;

    // Iterate.
    std::vector<Matrix> x_, z_, zinv_;
    Vector y_;

    // Schur complement pieces.
    std::vector<Matrix> d_;      // local x local per group
    std::vector<Matrix> bmat_;   // local x coupling per group
    std::vector<Eigen::LDLT<Matrix>> d_fact_;
    std::vector<Matrix> dinv_b_;
    Matrix cc_;
    Eigen::LDLT<Matrix> s_fact_;
};

inline void Solver::setup() {
    nblocks_ = p_.block_sizes.size();
    group_offset_.clear();
    std::size_t off = 0;
    for (const auto &g : p_.groups) {
        group_offset_.push_back(off);
        off += g.size();
    }
    m_local_ = off;
    m_coupling_ = p_.coupling.size();
    m_ = m_local_ + m_coupling_;

    incidence_.assign(nblocks_, {});
    block_group_.assign(nblocks_, -1);
    constraint_group_.assign(m_, -1);
    b_.resize(static_cast<Eigen::Index>(m_));

    auto add = [&](const LinearConstraint &c, std::size_t k, int group) {
        b_(static_cast<Eigen::Index>(k)) = c.rhs;
        constraint_group_[k] = group;
        for (const auto &t : c.terms) {
            if (t.block >= nblocks_ || t.matrix >= p_.pool.size())
                throw DimensionError("constraint term references an undeclared block or matrix");
            if (p_.pool[t.matrix].rows() != p_.block_sizes[t.block])
                throw DimensionError("coefficient matrix size does not match its block");
            if (group >= 0) {
                if (block_group_[t.block] >= 0 && block_group_[t.block] != group)
                    throw DimensionError("local constraint groups must touch disjoint blocks");
                block_group_[t.block] = group;
            }
            incidence_[t.block].push_back({k, t.matrix, t.scale});
        }
    };
    for (std::size_t g = 0; g < p_.groups.size(); ++g)
        for (std::size_t i = 0; i < p_.groups[g].size(); ++i)
            add(p_.groups[g][i], group_offset_[g] + i, static_cast<int>(g));
    for (std::size_t i = 0; i < m_coupling_; ++i)
        add(p_.coupling[i], m_local_ + i, -1);

    c_.resize(nblocks_);
    for (std::size_t j = 0; j < nblocks_; ++j)
        c_[j] = Matrix::Zero(p_.block_sizes[j], p_.block_sizes[j]);
    for (const auto &t : p_.objective) {
        if (t.block >= nblocks_ || t.matrix >= p_.pool.size())
            throw DimensionError("objective term references an undeclared block or matrix");
        c_[t.block] += t.scale * p_.pool[t.matrix];
    }

    d_.resize(p_.groups.size());
    bmat_.resize(p_.groups.size());
    d_fact_.resize(p_.groups.size());
    dinv_b_.resize(p_.groups.size());
}

inline Vector Solver::apply_a(const std::vector<Matrix> &x) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(m_));
    for (std::size_t j = 0; j < nblocks_; ++j)
        for (const auto &inc : incidence_[j])
            out(static_cast<Eigen::Index>(inc.constraint)) += inc.scale * linalg::dot(p_.pool[inc.matrix], x[j]);
    return out;
}

inline void Solver::apply_at(const Vector &y, std::vector<Matrix> &out) const {
    out.resize(nblocks_);
    for (std::size_t j = 0; j < nblocks_; ++j) {
        out[j].setZero(p_.block_sizes[j], p_.block_sizes[j]);
        for (const auto &inc : incidence_[j])
            out[j] += (inc.scale * y(static_cast<Eigen::Index>(inc.constraint))) * p_.pool[inc.matrix];
    }
}

inline bool Solver::factor_schur() {
    for (std::size_t g = 0; g < p_.groups.size(); ++g) {
        const auto k = static_cast<Eigen::Index>(p_.groups[g].size());
        d_[g].setZero(k, k);
        bmat_[g].setZero(k, static_cast<Eigen::Index>(m_coupling_));
    }
    cc_.setZero(static_cast<Eigen::Index>(m_coupling_), static_cast<Eigen::Index>(m_coupling_));

    std::vector<Matrix> prod;
    for (std::size_t j = 0; j < nblocks_; ++j) {
        const auto &inc = incidence_[j];
        prod.resize(inc.size());
        for (std::size_t u = 0; u < inc.size(); ++u)
            prod[u].noalias() = x_[j] * p_.pool[inc[u].matrix] * zinv_[j];
        const int grp = block_group_[j];
        for (std::size_t t = 0; t < inc.size(); ++t) {
            const Matrix &at = p_.pool[inc[t].matrix];
            const std::size_t kt = inc[t].constraint;
            for (std::size_t u = t; u < inc.size(); ++u) {
                const std::size_t ku = inc[u].constraint;
                // tr(A_t X A_u Z^-1) = sum_pq (A_t)_pq (X A_u Z^-1)_qp
                const double v =
                    inc[t].scale * inc[u].scale * at.cwiseProduct(prod[u].transpose()).sum();
                const bool lt = constraint_group_[kt] >= 0;
                const bool lu = constraint_group_[ku] >= 0;
                if (lt && lu) {
                    const auto a = static_cast<Eigen::Index>(kt - group_offset_[grp]);
                    const auto b = static_cast<Eigen::Index>(ku - group_offset_[grp]);
                    d_[grp](a, b) += v;
                    if (a != b)
                        d_[grp](b, a) += v;
                } else if (lt || lu) {
                    const std::size_t kl = lt ? kt : ku;
                    const std::size_t kc = lt ? ku : kt;
                    bmat_[grp](static_cast<Eigen::Index>(kl - group_offset_[grp]),
                               static_cast<Eigen::Index>(kc - m_local_)) += v;
                } else {
                    const auto a = static_cast<Eigen::Index>(kt - m_local_);
                    const auto b = static_cast<Eigen::Index>(ku - m_local_);
                    cc_(a, b) += v;
                    if (a != b)
                        cc_(b, a) += v;
                }
            }
        }
    }

    Matrix s = cc_;
    for (std::size_t g = 0; g < p_.groups.size(); ++g) {
        d_fact_[g].compute(d_[g]);
        if (d_fact_[g].info() != Eigen::Success)
            return false;
        if (m_coupling_ > 0) {
            dinv_b_[g] = d_fact_[g].solve(bmat_[g]);
            s.noalias() -= bmat_[g].transpose() * dinv_b_[g];
        }
    }
    if (m_coupling_ > 0) {
        s = linalg::symmetrized(s);
        // Tiny diagonal lift keeps nearly dependent coupling rows solvable.
        const double lift = 1e-14 * std::max(1.0, s.diagonal().cwiseAbs().maxCoeff());
        s.diagonal().array() += lift;
        s_fact_.compute(s);
        if (s_fact_.info() != Eigen::Success)
            return false;
    }
    return true;
}

inline Vector Solver::solve_schur(const Vector &rhs) const {
    Vector out(static_cast<Eigen::Index>(m_));
    Vector rc = rhs.tail(static_cast<Eigen::Index>(m_coupling_));
    if (m_coupling_ > 0) {
        for (std::size_t g = 0; g < p_.groups.size(); ++g) {
            const auto k = static_cast<Eigen::Index>(p_.groups[g].size());
            rc.noalias() -= dinv_b_[g].transpose() * rhs.segment(static_cast<Eigen::Index>(group_offset_[g]), k);
        }
        out.tail(static_cast<Eigen::Index>(m_coupling_)) = s_fact_.solve(rc);
    }
    const Vector yc = out.tail(static_cast<Eigen::Index>(m_coupling_));
    for (std::size_t g = 0; g < p_.groups.size(); ++g) {
        const auto k = static_cast<Eigen::Index>(p_.groups[g].size());
        const auto o = static_cast<Eigen::Index>(group_offset_[g]);
        Vector r = rhs.segment(o, k);
        if (m_coupling_ > 0)
            r.noalias() -= bmat_[g] * yc;
        out.segment(o, k) = d_fact_[g].solve(r);
    }
    return out;
}

/// Largest alpha <= 1 with x + alpha dx PSD (x assumed positive definite).
inline double Solver::max_step(const std::vector<Matrix> &x, const std::vector<Matrix> &dx) const {
    double alpha = 1.0;
    for (std::size_t j = 0; j < nblocks_; ++j) {
        double lmin;
        if (x[j].rows() == 1) {
            lmin = dx[j](0, 0) / x[j](0, 0);
        } else {
            Eigen::LLT<Matrix> llt(x[j]);
            if (llt.info() != Eigen::Success)
                return 0.0;
            const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(x[j].rows(), x[j].cols()));
            const Matrix m = l_inv * dx[j] * l_inv.transpose();
            lmin = linalg::min_eigenvalue(linalg::symmetrized(m));
        }
        if (!std::isfinite(lmin))
            return 0.0;
        if (lmin < 0.0)
            alpha = std::min(alpha, -1.0 / lmin);
    }
    return alpha;
}

inline Result Solver::run() {
    Result res;
    // Starting point in the style of SDPT3: scaled identities.
    double a_norm_max = 0.0;
    double ratio_max = 0.0;
    std::vector<double> a_norm(m_, 0.0);
    for (std::size_t j = 0; j < nblocks_; ++j)
        for (const auto &inc : incidence_[j])
            a_norm[inc.constraint] += inc.scale * inc.scale * p_.pool[inc.matrix].squaredNorm();
    for (std::size_t k = 0; k < m_; ++k) {
        const double nrm = std::sqrt(a_norm[k]);
        a_norm_max = std::max(a_norm_max, nrm);
        ratio_max = std::max(ratio_max, (1.0 + std::abs(b_(static_cast<Eigen::Index>(k)))) / (1.0 + nrm));
    }
    double c_norm = 0.0;
    for (const auto &c : c_)
        c_norm = std::max(c_norm, c.norm());

    x_.resize(nblocks_);
    z_.resize(nblocks_);
    zinv_.resize(nblocks_);
    for (std::size_t j = 0; j < nblocks_; ++j) {
        const int nj = p_.block_sizes[j];
        const double sx = std::max(1.0, std::max(std::sqrt(nj), nj * ratio_max));
        const double sz = std::max(1.0, std::max({std::sqrt(nj), a_norm_max, c_norm}));
        x_[j] = sx * Matrix::Identity(nj, nj);
        z_[j] = sz * Matrix::Identity(nj, nj);
    }
    y_ = Vector::Zero(static_cast<Eigen::Index>(m_));

    double total_dim = 0.0;
    for (int nj : p_.block_sizes)
        total_dim += nj;
    const double b_norm = b_.norm();

    std::vector<Matrix> aty, rd, dx(nblocks_), dz(nblocks_), dxa(nblocks_), dza(nblocks_), g(nblocks_), w(nblocks_);
    res.status = Status::MaxIters;
    int short_steps = 0;

    // Best iterate by worst ratio of each residual to its tolerance. Near the
    // end roundoff in the direction can push the residuals back up.
    struct Snapshot {
        std::vector<Matrix> x, z;
        Vector y;
        double pobj = 0.0, dobj = 0.0, pinf = 0.0, dinf = 0.0;
        int iter = 0;
        double merit = std::numeric_limits<double>::infinity();
    } best;
    int since_best = 0;

    for (int iter = 0; iter <= opt_.max_iters; ++iter) {
        bool z_definite = true;
        for (std::size_t j = 0; j < nblocks_ && z_definite; ++j) {
            Eigen::LLT<Matrix> llt(z_[j]);
            z_definite = llt.info() == Eigen::Success;
            zinv_[j] = llt.solve(Matrix::Identity(z_[j].rows(), z_[j].cols()));
        }
        if (!z_definite) {
            res.status = Status::NumericalFailure;
            break;
        }
        const Vector ax = apply_a(x_);
        const Vector rp = b_ - ax;
        apply_at(y_, aty);
        rd.resize(nblocks_);
        double rd_norm2 = 0.0;
        for (std::size_t j = 0; j < nblocks_; ++j) {
            rd[j] = c_[j] - aty[j] + z_[j];
            rd_norm2 += rd[j].squaredNorm();
        }
        const double pobj = inner(c_, x_);
        const double dobj = b_.dot(y_);
        const double mu = inner(x_, z_) / total_dim;
        res.primal_objective = pobj;
        res.dual_objective = dobj;
        res.primal_infeasibility = rp.norm() / (1.0 + b_norm);
        res.dual_infeasibility = std::sqrt(rd_norm2) / (1.0 + c_norm);
        res.iterations = iter;

        if (opt_.verbose)
            std::fprintf(stderr, "%3d pobj=% .10e dobj=% .10e pinf=%.2e dinf=%.2e mu=%.2e\n", iter, pobj, dobj,
                         res.primal_infeasibility, res.dual_infeasibility, mu);
        if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu)) {
            res.status = Status::NumericalFailure;
            break;
        }
        const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        const double merit = std::max({rel_gap / opt_.gap_tol, res.primal_infeasibility / opt_.feas_tol,
                                       res.dual_infeasibility / opt_.feas_tol});
        if (merit < best.merit) {
            best = {x_, z_, y_, pobj, dobj, res.primal_infeasibility, res.dual_infeasibility, iter, merit};
            since_best = 0;
        } else if (++since_best >= 8) {
            res.status = Status::Stalled;
            break;
        }
        if (rel_gap <= opt_.gap_tol && res.primal_infeasibility <= opt_.feas_tol &&
            res.dual_infeasibility <= opt_.feas_tol) {
            res.status = Status::Optimal;
            break;
        }
        if (res.dual_infeasibility <= opt_.feas_tol && dobj < opt_.primal_lower_bound - 1e-6) {
            res.status = Status::Infeasible;
            break;
        }
        if (y_.cwiseAbs().maxCoeff() > 1e12) {
            res.status = Status::Infeasible;
            break;
        }
        if (iter == opt_.max_iters)
            break;

        if (!factor_schur()) {
            if (opt_.verbose)
                std::fprintf(stderr, "schur factorization failed\n");
            res.status = Status::NumericalFailure;
            break;
        }

        // Direction for a given complementarity target and second-order term.
        auto direction = [&](double target, const std::vector<Matrix> *corr_x, const std::vector<Matrix> *corr_z,
                             std::vector<Matrix> &out_x, std::vector<Matrix> &out_z) {
            for (std::size_t j = 0; j < nblocks_; ++j) {
                g[j] = -x_[j] + x_[j] * rd[j] * zinv_[j];
                if (target != 0.0)
                    g[j] += target * zinv_[j];
                if (corr_x)
                    g[j] -= (*corr_x)[j] * (*corr_z)[j] * zinv_[j];
                g[j] = linalg::symmetrized(g[j]);
            }
            const Vector rhs = apply_a(g) - rp;
            Vector dy = solve_schur(rhs);
            std::vector<Matrix> atdy;
            apply_at(dy, atdy);
            // Iterative refinement against the exact operator M v = A(X A^T(v) Z^-1).
            for (int refine = 0; refine < 2; ++refine) {
                for (std::size_t j = 0; j < nblocks_; ++j)
                    w[j] = linalg::symmetrized(x_[j] * atdy[j] * zinv_[j]);
                const Vector resid = rhs - apply_a(w);
                if (resid.norm() <= 1e-15 * (1.0 + rhs.norm()))
                    break;
                dy += solve_schur(resid);
                apply_at(dy, atdy);
            }
            for (std::size_t j = 0; j < nblocks_; ++j) {
                out_z[j] = atdy[j] - rd[j];
                out_x[j] = linalg::symmetrized(g[j] - x_[j] * atdy[j] * zinv_[j]);
            }
            return dy;
        };

        direction(0.0, nullptr, nullptr, dxa, dza);
        const double ap_aff = max_step(x_, dxa);
        const double ad_aff = max_step(z_, dza);
        double mu_aff = 0.0;
        for (std::size_t j = 0; j < nblocks_; ++j)
            mu_aff += linalg::dot(x_[j] + ap_aff * dxa[j], z_[j] + ad_aff * dza[j]);
        mu_aff /= total_dim;
        double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3);
        sigma = std::clamp(sigma, 0.0, 1.0);

        const Vector dy = direction(sigma * mu, &dxa, &dza, dx, dz);
        const double ap = std::min(1.0, opt_.step_fraction * max_step(x_, dx));
        const double ad = std::min(1.0, opt_.step_fraction * max_step(z_, dz));
        if (opt_.verbose)
            std::fprintf(stderr, "    sigma=%.3e ap=%.3e ad=%.3e\n", sigma, ap, ad);
        if (!std::isfinite(ap) || !std::isfinite(ad) || !(ad > 0.0)) {
            res.status = Status::NumericalFailure;
            break;
        }
        // The primal side can pin itself to the cone boundary while the dual
        // keeps converging; stop with the last iterate instead of looping.
        if (ap < 1e-6 || (ap < 0.1 && ++short_steps >= 5)) {
            res.status = Status::Stalled;
            break;
        }
        if (ap >= 0.1)
            short_steps = 0;
        for (std::size_t j = 0; j < nblocks_; ++j) {
            x_[j] += ap * dx[j];
            z_[j] += ad * dz[j];
        }
        y_ += ad * dy;
    }

    if ((res.status == Status::Stalled || res.status == Status::MaxIters) && best.merit < merit_of(res)) {
        x_ = std::move(best.x);
        z_ = std::move(best.z);
        y_ = std::move(best.y);
        res.primal_objective = best.pobj;
        res.dual_objective = best.dobj;
        res.primal_infeasibility = best.pinf;
        res.dual_infeasibility = best.dinf;
        if (best.merit <= 1.0)
            res.status = Status::Optimal;
    }
    res.x = x_;
    res.z = z_;
    res.y = y_;
    return res;
}

} // namespace detail

inline Result solve(const BlockProblem &problem, const Options &options = {}) {
    detail::Solver solver(problem, options);
    return solver.run();
}

} // namespace sdqrng::sdp
