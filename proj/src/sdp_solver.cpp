#include "tstab/lmi.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace tstab::lmi {

namespace {

struct Block {
    int n = 0;
    Eigen::MatrixXd F0;
    std::vector<std::pair<int, Eigen::MatrixXd>> F;  // (var, symmetric coeff)
};

struct BlockProblem {
    int m = 0;  // variable count
    std::vector<Block> blocks;
    Eigen::VectorXd c;  // minimize c^T y
};

// tr(A * B) for dense square A, B.
double trace_prod(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    return A.cwiseProduct(B.transpose()).sum();
}

// Largest alpha with M + alpha * dM >= 0, via L^-1 dM L^-T.
double max_step(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& dM) {
    const Eigen::MatrixXd& L = llt.matrixL();
    Eigen::MatrixXd W = L.triangularView<Eigen::Lower>().solve(dM);
    W = L.triangularView<Eigen::Lower>().solve(W.transpose()).transpose().eval();
    W = 0.5 * (W + W.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

struct IpmState {
    Eigen::VectorXd y;
    std::vector<Eigen::MatrixXd> X, S;
};

struct IpmResult {
    bool converged = false;
    bool numerical_failure = false;
    int iterations = 0;
    double pobj = 0.0;
    double dobj = 0.0;
    std::string note;
};

// Infeasible-start HKM predictor-corrector. Maintains y, slacks S and dual
// multipliers X; blocks stay strictly positive definite throughout.
IpmResult run_ipm(const BlockProblem& prob, IpmState& st, const SolveOptions& opts) {
    IpmResult res;
    const int m = prob.m;
    const size_t nb = prob.blocks.size();
    double total_dim = 0.0;
    for (const Block& b : prob.blocks) total_dim += b.n;

    const double cnorm = prob.c.size() ? prob.c.cwiseAbs().maxCoeff() : 0.0;
    double f0norm = 1.0;
    for (const Block& b : prob.blocks)
        f0norm = std::max(f0norm, b.F0.cwiseAbs().maxCoeff());

    std::vector<Eigen::MatrixXd> G(nb), Rd(nb), Sinv(nb);
    std::vector<Eigen::LLT<Eigen::MatrixXd>> Sllt(nb), Xllt(nb);

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        res.iterations = iter;

        // residuals
        double rd_norm = 0.0;
        for (size_t b = 0; b < nb; ++b) {
            G[b] = prob.blocks[b].F0;
            for (const auto& [v, K] : prob.blocks[b].F) G[b] += st.y[v] * K;
            Rd[b] = G[b] - st.S[b];
            rd_norm = std::max(rd_norm, Rd[b].cwiseAbs().maxCoeff());
        }
        Eigen::VectorXd rp = prob.c;
        for (size_t b = 0; b < nb; ++b)
            for (const auto& [v, K] : prob.blocks[b].F)
                rp[v] -= trace_prod(K, st.X[b]);
        const double rp_norm = m > 0 ? rp.cwiseAbs().maxCoeff() : 0.0;

        double gap = 0.0;
        for (size_t b = 0; b < nb; ++b) gap += trace_prod(st.X[b], st.S[b]);
        const double mu = total_dim > 0 ? gap / total_dim : 0.0;

        res.pobj = prob.c.dot(st.y);
        res.dobj = 0.0;
        for (size_t b = 0; b < nb; ++b) res.dobj -= trace_prod(prob.blocks[b].F0, st.X[b]);

        const double rel_gap = gap / (1.0 + std::abs(res.pobj) + std::abs(res.dobj));
        if (rel_gap <= opts.tol_gap && rp_norm <= opts.tol_feas * (1.0 + cnorm) &&
            rd_norm <= opts.tol_feas * (1.0 + f0norm)) {
            res.converged = true;
            return res;
        }

        // factorizations
        bool fact_ok = true;
        for (size_t b = 0; b < nb; ++b) {
            Sllt[b].compute(st.S[b]);
            Xllt[b].compute(st.X[b]);
            if (Sllt[b].info() != Eigen::Success || Xllt[b].info() != Eigen::Success)
                fact_ok = false;
        }
        if (!fact_ok) {
            res.numerical_failure = true;
            res.note = "slack or multiplier factorization broke down";
            return res;
        }
        for (size_t b = 0; b < nb; ++b)
            Sinv[b] = Sllt[b].solve(Eigen::MatrixXd::Identity(prob.blocks[b].n, prob.blocks[b].n));

        // Schur complement H_ij = sum_b tr(F_i X F_j S^-1), plus the
        // direction-independent right-hand-side pieces.
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
        Eigen::VectorXd a = Eigen::VectorXd::Zero(m);  // tr(F_j S^-1)
        Eigen::VectorXd w = Eigen::VectorXd::Zero(m);  // tr(F_j X Rd S^-1)
        for (size_t b = 0; b < nb; ++b) {
            const auto& terms = prob.blocks[b].F;
            const size_t k = terms.size();
            std::vector<Eigen::MatrixXd> T(k);
            for (size_t j = 0; j < k; ++j)
                T[j] = st.X[b] * terms[j].second * Sinv[b];
            const Eigen::MatrixXd XRS = st.X[b] * Rd[b] * Sinv[b];
            for (size_t i = 0; i < k; ++i) {
                const int vi = terms[i].first;
                a[vi] += trace_prod(terms[i].second, Sinv[b]);
                w[vi] += trace_prod(terms[i].second, XRS);
                for (size_t j = i; j < k; ++j) {
                    const double hij = trace_prod(terms[i].second, T[j]);
                    const int vj = terms[j].first;
                    H(vi, vj) += hij;
                    if (vi != vj) H(vj, vi) += hij;
                }
            }
        }
        H = 0.5 * (H + H.transpose()).eval();

        Eigen::LLT<Eigen::MatrixXd> Hllt(H);
        if (Hllt.info() != Eigen::Success) {
            double ridge = 1e-14 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
            for (int t = 0; t < 8 && Hllt.info() != Eigen::Success; ++t, ridge *= 100.0) {
                Eigen::MatrixXd Hr = H + ridge * Eigen::MatrixXd::Identity(m, m);
                Hllt.compute(Hr);
            }
            if (Hllt.info() != Eigen::Success) {
                res.numerical_failure = true;
                res.note = "Schur complement not positive definite";
                return res;
            }
        }

        auto solve_direction = [&](double sigma_mu, const std::vector<Eigen::MatrixXd>* corr,
                                   Eigen::VectorXd& dy, std::vector<Eigen::MatrixXd>& dS,
                                   std::vector<Eigen::MatrixXd>& dX) {
            Eigen::VectorXd rhs = sigma_mu * a - w - prob.c;
            if (corr != nullptr) {
                for (size_t b = 0; b < nb; ++b) {
                    const Eigen::MatrixXd CS = (*corr)[b] * Sinv[b];
                    for (const auto& [v, K] : prob.blocks[b].F) rhs[v] -= trace_prod(K, CS);
                }
            }
            dy = Hllt.solve(rhs);
            dS.resize(nb);
            dX.resize(nb);
            for (size_t b = 0; b < nb; ++b) {
                dS[b] = Rd[b];
                for (const auto& [v, K] : prob.blocks[b].F) dS[b] += dy[v] * K;
                Eigen::MatrixXd rhsX = sigma_mu * Sinv[b] - st.X[b] - st.X[b] * dS[b] * Sinv[b];
                if (corr != nullptr) rhsX -= (*corr)[b] * Sinv[b];
                dX[b] = 0.5 * (rhsX + rhsX.transpose());
            }
        };

        // predictor
        Eigen::VectorXd dy;
        std::vector<Eigen::MatrixXd> dS, dX;
        solve_direction(0.0, nullptr, dy, dS, dX);

        double ap = 1.0, ad = 1.0;
        for (size_t b = 0; b < nb; ++b) {
            ap = std::min(ap, 0.99 * max_step(Xllt[b], dX[b]));
            ad = std::min(ad, 0.99 * max_step(Sllt[b], dS[b]));
        }
        double gap_aff = 0.0;
        for (size_t b = 0; b < nb; ++b)
            gap_aff += trace_prod(st.X[b] + ap * dX[b], st.S[b] + ad * dS[b]);
        const double mu_aff = total_dim > 0 ? gap_aff / total_dim : 0.0;
        double sigma = mu > 0 ? std::pow(mu_aff / mu, 3) : 0.0;
        sigma = std::clamp(sigma, 1e-8, 1.0);

        // corrector
        std::vector<Eigen::MatrixXd> corr(nb);
        for (size_t b = 0; b < nb; ++b) corr[b] = dX[b] * dS[b];
        solve_direction(sigma * mu, &corr, dy, dS, dX);

        ap = 1.0;
        ad = 1.0;
        const double tau = 0.95;
        for (size_t b = 0; b < nb; ++b) {
            ap = std::min(ap, tau * max_step(Xllt[b], dX[b]));
            ad = std::min(ad, tau * max_step(Sllt[b], dS[b]));
        }
        if (!(ap > 1e-14) || !(ad > 1e-14)) {
            res.numerical_failure = true;
            res.note = "step length collapsed";
            return res;
        }

        st.y += ad * dy;
        for (size_t b = 0; b < nb; ++b) {
            st.X[b] += ap * dX[b];
            st.S[b] += ad * dS[b];
        }
    }
    res.iterations = opts.max_iter;
    return res;  // not converged
}

BlockProblem assemble(const SDPProblem& problem) {
    BlockProblem bp;
    bp.m = problem.vars.size();
    bp.c = Eigen::VectorXd::Zero(bp.m);
    for (const auto& [v, coeff] : problem.objective) bp.c[v] += coeff;
    for (const Constraint& con : problem.constraints) {
        Block b;
        b.n = con.expr.rows();
        b.F0 = con.expr.constant_term();
        if (con.sense == Sense::PsdMargin)
            b.F0 -= problem.margin * Eigen::MatrixXd::Identity(b.n, b.n);
        b.F0 = 0.5 * (b.F0 + b.F0.transpose()).eval();
        for (const auto& [v, K] : con.expr.terms())
            b.F.push_back({v, 0.5 * (K + K.transpose())});
        bp.blocks.push_back(std::move(b));
    }
    return bp;
}

// Margin-maximization phase: max t s.t. G_b(x) - t I >= 0, t <= cap.
// Always has a strictly feasible start, so it doubles as the feasibility
// test (t* <= 0 exposes an approximate improving dual ray) and as a
// centered-interior-point generator.
BlockProblem phase1_problem(const BlockProblem& bp, double cap) {
    BlockProblem ext = bp;
    const int t = bp.m;
    ext.m = bp.m + 1;
    ext.c = Eigen::VectorXd::Zero(ext.m);
    ext.c[t] = -1.0;  // maximize t
    for (Block& b : ext.blocks)
        b.F.push_back({t, -Eigen::MatrixXd::Identity(b.n, b.n)});
    Block capb;
    capb.n = 1;
    capb.F0 = Eigen::MatrixXd::Constant(1, 1, cap);
    capb.F.push_back({t, -Eigen::MatrixXd::Identity(1, 1)});
    ext.blocks.push_back(std::move(capb));
    return ext;
}

double min_block_eig(const BlockProblem& bp, const Eigen::VectorXd& y) {
    double lmin = std::numeric_limits<double>::infinity();
    for (const Block& b : bp.blocks) {
        Eigen::MatrixXd G = b.F0;
        for (const auto& [v, K] : b.F) G += y[v] * K;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
        lmin = std::min(lmin, es.eigenvalues().minCoeff());
    }
    return lmin;
}

void init_state(const BlockProblem& bp, const Eigen::VectorXd& y0, IpmState& st) {
    st.y = y0;
    st.X.resize(bp.blocks.size());
    st.S.resize(bp.blocks.size());
    for (size_t b = 0; b < bp.blocks.size(); ++b) {
        const Block& blk = bp.blocks[b];
        Eigen::MatrixXd G = blk.F0;
        for (const auto& [v, K] : blk.F) G += y0[v] * K;
        st.S[b] = G;
        st.X[b] = Eigen::MatrixXd::Identity(blk.n, blk.n);
    }
}

} // namespace

Solution solve(const SDPProblem& problem, const SolveOptions& opts) {
    Solution sol;
    const int m = problem.vars.size();
    BlockProblem bp = assemble(problem);

    if (bp.blocks.empty()) {
        sol.status = problem.objective.empty() ? SolveStatus::Feasible : SolveStatus::Optimal;
        sol.x = Eigen::VectorXd::Zero(m);
        sol.detail = "no constraints";
        return sol;
    }
    if (m == 0) {
        sol.x = Eigen::VectorXd::Zero(0);
        const double lmin = min_block_eig(bp, sol.x);
        sol.max_violation = lmin;
        sol.status = lmin >= -opts.tol_feas ? SolveStatus::Feasible : SolveStatus::Infeasible;
        return sol;
    }

    const bool feasibility_only = problem.objective.empty();
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(m);
    bool warm_interior = false;
    if (opts.warm_start.size() == m) {
        const double lmin = min_block_eig(bp, opts.warm_start);
        if (lmin > 1e-8) {
            x0 = opts.warm_start;
            warm_interior = true;
        }
    }

    Eigen::VectorXd x = x0;
    if (!warm_interior || feasibility_only) {
        // phase 1: maximize the common slack margin
        const double cap = 1.0;
        BlockProblem p1 = phase1_problem(bp, cap);
        Eigen::VectorXd y0(m + 1);
        y0.head(m) = x0;
        const double lmin0 = min_block_eig(bp, x0);
        y0[m] = std::min(lmin0 - 1.0, cap - 1.0);

        IpmState st;
        init_state(p1, y0, st);
        IpmResult r1 = run_ipm(p1, st, opts);
        if (r1.numerical_failure) {
            sol.status = SolveStatus::NumericalFailure;
            sol.x = st.y.head(m);
            sol.detail = "margin phase: " + r1.note;
            return sol;
        }
        const double tstar = st.y[m];
        if (!r1.converged && tstar <= opts.tol_feas) {
            sol.status = SolveStatus::MaxIterations;
            sol.x = st.y.head(m);
            sol.iterations = r1.iterations;
            sol.detail = "margin phase hit iteration limit";
            return sol;
        }
        if (tstar <= opts.tol_feas) {
            sol.status = SolveStatus::Infeasible;
            sol.x = st.y.head(m);
            sol.iterations = r1.iterations;
            std::ostringstream os;
            os << "maximum common margin " << tstar
               << " <= 0; dual ray value " << -r1.dobj;
            sol.detail = os.str();
            return sol;
        }
        x = st.y.head(m);
        sol.iterations = r1.iterations;
        if (feasibility_only) {
            sol.status = SolveStatus::Feasible;
            sol.x = x;
            sol.objective = 0.0;
            sol.max_violation = check_solution(problem, x).minCoeff();
            std::ostringstream os;
            os << "margin " << tstar;
            sol.detail = os.str();
            if (sol.max_violation < -opts.tol_feas) sol.status = SolveStatus::NumericalFailure;
            return sol;
        }
    }

    // phase 2: minimize the objective from the interior point
    IpmState st;
    init_state(bp, x, st);
    IpmResult r2 = run_ipm(bp, st, opts);
    sol.x = st.y;
    sol.iterations += r2.iterations;
    sol.objective = r2.pobj;
    if (r2.numerical_failure) {
        sol.status = SolveStatus::NumericalFailure;
        sol.detail = "objective phase: " + r2.note;
        return sol;
    }
    if (!r2.converged) {
        sol.status = SolveStatus::MaxIterations;
        sol.detail = "objective phase hit iteration limit";
        return sol;
    }
    sol.max_violation = check_solution(problem, sol.x).minCoeff();
    sol.status = sol.max_violation >= -opts.tol_feas ? SolveStatus::Optimal
                                                     : SolveStatus::NumericalFailure;
    return sol;
}

} // namespace tstab::lmi
