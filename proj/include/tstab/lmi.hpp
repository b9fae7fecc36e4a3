#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace tstab::lmi {

using Index = int;

/// Ordered registry of scalar decision variables. A sharing key lets one
/// scalar back several matrix slots (shared-diagonal pools, aliased blocks).
class VarSpace {
public:
    Index add(const std::string& name);
    Index add_shared(const std::string& key, const std::string& name);

    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(Index v) const { return names_[v]; }

private:
    std::vector<std::string> names_;
    std::map<std::string, Index> by_name_;
    std::map<std::string, Index> by_key_;
};

/// A structured matrix of decision variables: each slot holds a variable
/// index or -1 for a structural zero. Symmetry and sharing are expressed
/// by repeating indices across slots.
struct MatVar {
    int rows = 0;
    int cols = 0;
    Eigen::MatrixXi slot;

    Eigen::MatrixXd value(const Eigen::VectorXd& x) const;
};

/// n x n symmetric: n(n+1)/2 scalars.
MatVar symmetric_var(VarSpace& space, const std::string& prefix, int n);
/// n x n symmetric with structurally zero diagonal: n(n-1)/2 scalars.
MatVar hollow_symmetric_var(VarSpace& space, const std::string& prefix, int n);
/// n x n diagonal: n scalars.
MatVar diagonal_var(VarSpace& space, const std::string& prefix, int n);
/// n x n with no structure: n^2 scalars.
MatVar square_var(VarSpace& space, const std::string& prefix, int n);
/// r x c rectangular: r*c scalars.
MatVar rect_var(VarSpace& space, const std::string& prefix, int r, int c);

/// Pool of diagonal entries d_jj^rho keyed by (dimension, fuzzy-set ordinal).
/// Every rule's diagonal matrix is a view over the same pool, so rules that
/// share an ordinal on dimension j share the scalar exactly.
struct SharedDiagonalPool {
    std::vector<std::vector<Index>> vars;  // [dimension][ordinal]

    /// Diagonal n x n MatVar for one rule's ordinal row.
    MatVar diagonal_for(const Eigen::VectorXi& ordinal_row) const;
    int total() const;
};

SharedDiagonalPool shared_diagonal_var(VarSpace& space, const std::string& prefix,
                                       const std::vector<int>& set_counts);

/// Affine matrix expression K0 + sum_v x_v * Kv. Coefficients may be
/// rectangular while composing; constraints require a symmetric result.
class MatExpr {
public:
    MatExpr() = default;
    MatExpr(int rows, int cols);

    static MatExpr constant(const Eigen::MatrixXd& K0);
    static MatExpr of(const MatVar& var);
    static MatExpr zero(int rows, int cols) { return MatExpr(rows, cols); }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const Eigen::MatrixXd& constant_term() const { return k0_; }
    const std::vector<std::pair<Index, Eigen::MatrixXd>>& terms() const { return terms_; }

    MatExpr operator+(const MatExpr& rhs) const;
    MatExpr operator-(const MatExpr& rhs) const;
    MatExpr operator-() const;
    MatExpr scaled(double s) const;
    MatExpr transpose() const;

    /// E + E^T, the paper-style symmetrization.
    MatExpr sym() const;

    /// A^T * E * A for constant A.
    MatExpr congruence(const Eigen::MatrixXd& A) const;

    friend MatExpr operator*(const Eigen::MatrixXd& A, const MatExpr& e);
    friend MatExpr operator*(const MatExpr& e, const Eigen::MatrixXd& A);

    /// Assembles a block matrix; every block must be filled.
    static MatExpr block(const std::vector<std::vector<MatExpr>>& grid);

    Eigen::MatrixXd eval(const Eigen::VectorXd& x) const;

    bool is_symmetric(double tol = 1e-12) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    Eigen::MatrixXd k0_;
    std::vector<std::pair<Index, Eigen::MatrixXd>> terms_;  // sorted by Index

    void add_term(Index v, const Eigen::MatrixXd& K);
};

enum class Sense {
    Psd,        // expr >= 0
    PsdMargin,  // expr >= eps * I
};

struct Constraint {
    MatExpr expr;
    Sense sense = Sense::Psd;
    std::string label;
};

struct SDPProblem {
    VarSpace vars;
    std::vector<Constraint> constraints;
    std::vector<std::pair<Index, double>> objective;  // linear, min c^T x
    double margin = 1e-6;                             // eps for PsdMargin

    void add_constraint(MatExpr expr, Sense sense, std::string label);
    void add_objective_term(Index v, double coeff);
    /// Adds tr(W * V(x)) to the objective.
    void add_trace_objective(const Eigen::MatrixXd& W, const MatVar& v);
    void clear_objective() { objective.clear(); }

    /// Human-readable dump: variables, then constraint blocks with
    /// coefficients, in stable order.
    std::string debug_dump() const;
};

enum class SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    MaxIterations,
    NumericalFailure,
};

const char* to_string(SolveStatus s);

struct Solution {
    SolveStatus status = SolveStatus::NumericalFailure;
    Eigen::VectorXd x;
    double objective = 0.0;
    /// Most negative eigenvalue across all constraints (margins folded in).
    double max_violation = 0.0;
    int iterations = 0;
    std::string detail;
};

struct SolveOptions {
    double tol_feas = 1e-7;
    double tol_gap = 1e-8;
    int max_iter = 100;
    /// Optional warm start; used when it is strictly feasible.
    Eigen::VectorXd warm_start;
};

/// Dense primal-dual interior-point solve. Zero-objective problems run a
/// single phase maximizing the common slack margin (centered feasibility);
/// problems with an objective run that phase first, then minimize from the
/// interior point found.
Solution solve(const SDPProblem& problem, const SolveOptions& opts = {});

/// Independent verification: evaluates every constraint at `values` with a
/// dense symmetric eigensolver and returns per-constraint minimum
/// eigenvalues (margins folded in). Never consults solver state.
Eigen::VectorXd check_solution(const SDPProblem& problem, const Eigen::VectorXd& values);

} // namespace tstab::lmi
