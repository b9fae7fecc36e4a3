#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tstab {

/// One fuzzy-set grade w_j^rho on a single state dimension.
///
/// Three forms are supported:
///   - Gauss:      w(x) = c * exp(-a * (x - m)^2), c > 0, a > 0
///   - Complement: w(x) = 1 - sum of the family's other members
///   - Custom:     arbitrary differentiable scalar function (forces
///                 grid-based derivative bounds)
struct Membership {
    enum class Kind { Gauss, Complement, Custom };

    Kind kind = Kind::Gauss;
    double c = 1.0;
    double a = 1.0;
    double m = 0.0;
    std::function<double(double)> fn;   // Custom only
    std::function<double(double)> dfn;  // Custom only

    static Membership gauss(double c, double a, double m);
    static Membership complement();
    static Membership custom(std::function<double(double)> fn,
                             std::function<double(double)> dfn);
};

/// The family of fuzzy sets living on one state dimension, with
/// partition-of-unity normalization.
class MembershipFamily {
public:
    MembershipFamily() = default;
    explicit MembershipFamily(int dimension) : dimension_(dimension) {}

    void add(Membership m);

    int count() const { return static_cast<int>(members_.size()); }
    int dimension() const { return dimension_; }
    const Membership& member(int rho) const { return members_[rho]; }

    /// Raw grade w^rho(x) and its derivative.
    double weight(int rho, double x) const;
    double weight_deriv(int rho, double x) const;

    /// Normalized memberships mu^rho(x): nonnegative, summing to one.
    /// Throws DegenerateDenominator when sum_rho w^rho(x) < 1e-300.
    Eigen::VectorXd normalize(double x) const;

    /// Analytic d(mu^rho)/dx via the quotient rule.
    Eigen::VectorXd normalize_deriv(double x) const;

    /// True when the members sum identically to one (exactly one
    /// complement member and the rest parametric), so mu == w.
    bool complement_closed() const;

    /// True when every member decays at infinity (Gauss or complement
    /// of Gauss); such families always admit finite derivative bounds.
    bool all_decaying() const;

private:
    int dimension_ = 0;
    std::vector<Membership> members_;
};

/// Ito stochastic T-S model: per-rule matrices plus the per-dimension
/// membership families and the rule -> fuzzy-set ordinal table.
struct TSModel {
    int n = 0;  // state dimension
    int p = 0;  // input dimension (0 for unforced models)
    int s = 0;  // rule count

    std::vector<Eigen::MatrixXd> A;  // n x n, drift vertices
    std::vector<Eigen::MatrixXd> B;  // n x p (may be n x 0)
    std::vector<Eigen::MatrixXd> C;  // n x n, diffusion vertices

    /// ordinals(i, j) in [0, s_j): which dimension-j fuzzy set rule i uses.
    Eigen::MatrixXi ordinals;

    std::vector<MembershipFamily> families;  // size n

    /// Half-width of the working box used for derivative bounds.
    double box_halfwidth = 50.0;

    /// Largest absolute entry across all system matrices (>= 1).
    double matrix_scale() const;

    /// True when s == prod_j s_j and every ordinal combination appears once.
    bool full_combination() const;
};

/// Fuzzy basis functions h_i(x) = prod_j mu_j^{alpha_ij}(x_j).
Eigen::VectorXd basis(const TSModel& model, const Eigen::VectorXd& x);

/// s x n matrix of partial derivatives dh_i/dx_j, computed analytically.
Eigen::MatrixXd basis_jacobian(const TSModel& model, const Eigen::VectorXd& x);

/// Derivative bounds beta_ij >= sup_box |x_j d(mu_j^{alpha_ij})/dx_j|.
struct BetaBounds {
    enum class Method { ClosedForm, GridRefined };

    /// Bound actually used downstream: the common envelope, i.e. the
    /// largest per-entry rounded-up supremum applied to every entry.
    Eigen::MatrixXd values;  // s x n

    /// Raw computed suprema before rounding/enveloping.
    Eigen::MatrixXd raw_sup;  // s x n

    std::vector<std::vector<Method>> method;  // [i][j]

    /// beta = sum_j sum_i values(i, j).
    double beta = 0.0;
};

/// Computes BetaBounds over the model's working box. Gaussian members
/// centered at zero in complement-closed families use the closed-form
/// maximum 2c/e; everything else is bounded by a dense grid scan
/// followed by golden-section refinement.
/// Throws UnboundedDerivative when a custom member's |x mu'| still grows
/// at the box edge.
BetaBounds beta_bounds(const TSModel& model);

struct ModelIssue {
    std::string what;
};

/// Structural validation: dimension consistency, ordinal distinctness,
/// full-combination coverage, partition of unity at sampled points.
/// Violations are returned as data; an empty list means valid.
std::vector<ModelIssue> validate(const TSModel& model);

} // namespace tstab
