#include "tstab/lmi.hpp"

#include "tstab/errors.hpp"

#include <algorithm>
#include <sstream>

namespace tstab::lmi {

Index VarSpace::add(const std::string& name) {
    if (by_name_.count(name))
        throw DimensionMismatch("variable name not unique: " + name);
    const Index v = static_cast<Index>(names_.size());
    names_.push_back(name);
    by_name_[name] = v;
    return v;
}

Index VarSpace::add_shared(const std::string& key, const std::string& name) {
    auto it = by_key_.find(key);
    if (it != by_key_.end()) return it->second;
    const Index v = add(name);
    by_key_[key] = v;
    return v;
}

Eigen::MatrixXd MatVar::value(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (slot(r, c) >= 0) M(r, c) = x[slot(r, c)];
    return M;
}

MatVar symmetric_var(VarSpace& space, const std::string& prefix, int n) {
    MatVar v{n, n, Eigen::MatrixXi::Constant(n, n, -1)};
    for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) {
            const Index idx = space.add(prefix + "[" + std::to_string(r + 1) + "," +
                                        std::to_string(c + 1) + "]");
            v.slot(r, c) = idx;
            v.slot(c, r) = idx;
        }
    return v;
}

MatVar hollow_symmetric_var(VarSpace& space, const std::string& prefix, int n) {
    MatVar v{n, n, Eigen::MatrixXi::Constant(n, n, -1)};
    for (int r = 0; r < n; ++r)
        for (int c = r + 1; c < n; ++c) {
            const Index idx = space.add(prefix + "[" + std::to_string(r + 1) + "," +
                                        std::to_string(c + 1) + "]");
            v.slot(r, c) = idx;
            v.slot(c, r) = idx;
        }
    return v;
}

MatVar diagonal_var(VarSpace& space, const std::string& prefix, int n) {
    MatVar v{n, n, Eigen::MatrixXi::Constant(n, n, -1)};
    for (int r = 0; r < n; ++r)
        v.slot(r, r) = space.add(prefix + "[" + std::to_string(r + 1) + "]");
    return v;
}

MatVar square_var(VarSpace& space, const std::string& prefix, int n) {
    return rect_var(space, prefix, n, n);
}

MatVar rect_var(VarSpace& space, const std::string& prefix, int r, int c) {
    MatVar v{r, c, Eigen::MatrixXi::Constant(r, c, -1)};
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            v.slot(i, j) = space.add(prefix + "[" + std::to_string(i + 1) + "," +
                                     std::to_string(j + 1) + "]");
    return v;
}

MatVar SharedDiagonalPool::diagonal_for(const Eigen::VectorXi& ordinal_row) const {
    const int n = static_cast<int>(vars.size());
    MatVar v{n, n, Eigen::MatrixXi::Constant(n, n, -1)};
    for (int j = 0; j < n; ++j) v.slot(j, j) = vars[j][ordinal_row[j]];
    return v;
}

int SharedDiagonalPool::total() const {
    int t = 0;
    for (const auto& dim : vars) t += static_cast<int>(dim.size());
    return t;
}

SharedDiagonalPool shared_diagonal_var(VarSpace& space, const std::string& prefix,
                                       const std::vector<int>& set_counts) {
    SharedDiagonalPool pool;
    pool.vars.resize(set_counts.size());
    for (size_t j = 0; j < set_counts.size(); ++j) {
        pool.vars[j].resize(set_counts[j]);
        for (int rho = 0; rho < set_counts[j]; ++rho) {
            pool.vars[j][rho] = space.add(prefix + "[" + std::to_string(j + 1) + "]^" +
                                          std::to_string(rho + 1));
        }
    }
    return pool;
}

MatExpr::MatExpr(int rows, int cols)
    : rows_(rows), cols_(cols), k0_(Eigen::MatrixXd::Zero(rows, cols)) {}

MatExpr MatExpr::constant(const Eigen::MatrixXd& K0) {
    MatExpr e(static_cast<int>(K0.rows()), static_cast<int>(K0.cols()));
    e.k0_ = K0;
    return e;
}

MatExpr MatExpr::of(const MatVar& var) {
    MatExpr e(var.rows, var.cols);
    for (int r = 0; r < var.rows; ++r)
        for (int c = 0; c < var.cols; ++c)
            if (var.slot(r, c) >= 0) {
                Eigen::MatrixXd K = Eigen::MatrixXd::Zero(var.rows, var.cols);
                K(r, c) = 1.0;
                e.add_term(var.slot(r, c), K);
            }
    return e;
}

void MatExpr::add_term(Index v, const Eigen::MatrixXd& K) {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), v,
                               [](const auto& t, Index idx) { return t.first < idx; });
    if (it != terms_.end() && it->first == v)
        it->second += K;
    else
        terms_.insert(it, {v, K});
}

MatExpr MatExpr::operator+(const MatExpr& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
        throw DimensionMismatch("MatExpr addition shape mismatch");
    MatExpr out = *this;
    out.k0_ += rhs.k0_;
    for (const auto& [v, K] : rhs.terms_) out.add_term(v, K);
    return out;
}

MatExpr MatExpr::operator-(const MatExpr& rhs) const { return *this + rhs.scaled(-1.0); }

MatExpr MatExpr::operator-() const { return scaled(-1.0); }

MatExpr MatExpr::scaled(double s) const {
    MatExpr out = *this;
    out.k0_ *= s;
    for (auto& [v, K] : out.terms_) K *= s;
    return out;
}

MatExpr MatExpr::transpose() const {
    MatExpr out(cols_, rows_);
    out.k0_ = k0_.transpose();
    for (const auto& [v, K] : terms_) out.add_term(v, K.transpose());
    return out;
}

MatExpr MatExpr::sym() const {
    if (rows_ != cols_) throw DimensionMismatch("sym() requires a square expression");
    return *this + this->transpose();
}

MatExpr MatExpr::congruence(const Eigen::MatrixXd& A) const {
    if (A.rows() != rows_) throw DimensionMismatch("congruence shape mismatch");
    MatExpr out(static_cast<int>(A.cols()), static_cast<int>(A.cols()));
    out.k0_ = A.transpose() * k0_ * A;
    for (const auto& [v, K] : terms_) out.add_term(v, A.transpose() * K * A);
    return out;
}

MatExpr operator*(const Eigen::MatrixXd& A, const MatExpr& e) {
    if (A.cols() != e.rows_) throw DimensionMismatch("matrix * expr shape mismatch");
    MatExpr out(static_cast<int>(A.rows()), e.cols_);
    out.k0_ = A * e.k0_;
    for (const auto& [v, K] : e.terms_) out.add_term(v, A * K);
    return out;
}

MatExpr operator*(const MatExpr& e, const Eigen::MatrixXd& A) {
    if (e.cols_ != A.rows()) throw DimensionMismatch("expr * matrix shape mismatch");
    MatExpr out(e.rows_, static_cast<int>(A.cols()));
    out.k0_ = e.k0_ * A;
    for (const auto& [v, K] : e.terms_) out.add_term(v, K * A);
    return out;
}

MatExpr MatExpr::block(const std::vector<std::vector<MatExpr>>& grid) {
    const int brows = static_cast<int>(grid.size());
    const int bcols = static_cast<int>(grid[0].size());
    std::vector<int> row_off(brows + 1, 0), col_off(bcols + 1, 0);
    for (int r = 0; r < brows; ++r) row_off[r + 1] = row_off[r] + grid[r][0].rows();
    for (int c = 0; c < bcols; ++c) col_off[c + 1] = col_off[c] + grid[0][c].cols();

    MatExpr out(row_off[brows], col_off[bcols]);
    for (int r = 0; r < brows; ++r) {
        for (int c = 0; c < bcols; ++c) {
            const MatExpr& e = grid[r][c];
            if (e.rows() != row_off[r + 1] - row_off[r] ||
                e.cols() != col_off[c + 1] - col_off[c])
                throw DimensionMismatch("block grid shapes inconsistent");
            out.k0_.block(row_off[r], col_off[c], e.rows(), e.cols()) += e.k0_;
            for (const auto& [v, K] : e.terms_) {
                Eigen::MatrixXd big = Eigen::MatrixXd::Zero(out.rows_, out.cols_);
                big.block(row_off[r], col_off[c], e.rows(), e.cols()) = K;
                out.add_term(v, big);
            }
        }
    }
    return out;
}

Eigen::MatrixXd MatExpr::eval(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd M = k0_;
    for (const auto& [v, K] : terms_) M += x[v] * K;
    return M;
}

bool MatExpr::is_symmetric(double tol) const {
    if (rows_ != cols_) return false;
    if ((k0_ - k0_.transpose()).cwiseAbs().maxCoeff() > tol) return false;
    for (const auto& [v, K] : terms_)
        if ((K - K.transpose()).cwiseAbs().maxCoeff() > tol) return false;
    return true;
}

void SDPProblem::add_constraint(MatExpr expr, Sense sense, std::string label) {
    if (!expr.is_symmetric(1e-10))
        throw DimensionMismatch("constraint expression not symmetric: " + label);
    constraints.push_back({std::move(expr), sense, std::move(label)});
}

void SDPProblem::add_objective_term(Index v, double coeff) {
    for (auto& [idx, c] : objective) {
        if (idx == v) {
            c += coeff;
            return;
        }
    }
    objective.push_back({v, coeff});
}

void SDPProblem::add_trace_objective(const Eigen::MatrixXd& W, const MatVar& v) {
    if (W.rows() != v.cols || W.cols() != v.rows)
        throw DimensionMismatch("trace objective shape mismatch");
    // tr(W V) = sum_{r,c} W(c,r) V(r,c)
    for (int r = 0; r < v.rows; ++r)
        for (int c = 0; c < v.cols; ++c)
            if (v.slot(r, c) >= 0) add_objective_term(v.slot(r, c), W(c, r));
}

std::string SDPProblem::debug_dump() const {
    std::ostringstream os;
    os << "variables (" << vars.size() << "):\n";
    for (int v = 0; v < vars.size(); ++v) os << "  [" << v << "] " << vars.name(v) << "\n";
    os << "objective:";
    if (objective.empty()) os << " (feasibility)";
    for (const auto& [v, c] : objective) os << " " << c << "*" << vars.name(v);
    os << "\nmargin: " << margin << "\n";
    for (size_t k = 0; k < constraints.size(); ++k) {
        const Constraint& con = constraints[k];
        os << "constraint " << k << " [" << con.label << "] size " << con.expr.rows()
           << (con.sense == Sense::PsdMargin ? " >= eps*I" : " >= 0") << "\n";
        os << "  const:\n" << con.expr.constant_term() << "\n";
        for (const auto& [v, K] : con.expr.terms()) {
            os << "  + " << vars.name(v) << " *\n" << K << "\n";
        }
    }
    return os.str();
}

const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
    }
    return "?";
}

Eigen::VectorXd check_solution(const SDPProblem& problem, const Eigen::VectorXd& values) {
    Eigen::VectorXd mins(problem.constraints.size());
    for (size_t k = 0; k < problem.constraints.size(); ++k) {
        const Constraint& con = problem.constraints[k];
        Eigen::MatrixXd M = con.expr.eval(values);
        if (con.sense == Sense::PsdMargin)
            M -= problem.margin * Eigen::MatrixXd::Identity(M.rows(), M.cols());
        M = 0.5 * (M + M.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        mins[static_cast<int>(k)] = M.size() == 0 ? 0.0 : es.eigenvalues().minCoeff();
    }
    return mins;
}

} // namespace tstab::lmi
