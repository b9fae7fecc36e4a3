#include "tstab/tsmodel.hpp"

#include "tstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace tstab {

Membership Membership::gauss(double c, double a, double m) {
    Membership w;
    w.kind = Kind::Gauss;
    w.c = c;
    w.a = a;
    w.m = m;
    return w;
}

Membership Membership::complement() {
    Membership w;
    w.kind = Kind::Complement;
    return w;
}

Membership Membership::custom(std::function<double(double)> fn,
                              std::function<double(double)> dfn) {
    Membership w;
    w.kind = Kind::Custom;
    w.fn = std::move(fn);
    w.dfn = std::move(dfn);
    return w;
}

void MembershipFamily::add(Membership m) {
    members_.push_back(std::move(m));
}

double MembershipFamily::weight(int rho, double x) const {
    const Membership& w = members_[rho];
    switch (w.kind) {
    case Membership::Kind::Gauss: {
        const double d = x - w.m;
        return w.c * std::exp(-w.a * d * d);
    }
    case Membership::Kind::Complement: {
        double sum = 0.0;
        for (int r = 0; r < count(); ++r) {
            if (r != rho) sum += weight(r, x);
        }
        return 1.0 - sum;
    }
    case Membership::Kind::Custom:
        return w.fn(x);
    }
    return 0.0;
}

double MembershipFamily::weight_deriv(int rho, double x) const {
    const Membership& w = members_[rho];
    switch (w.kind) {
    case Membership::Kind::Gauss: {
        const double d = x - w.m;
        return -2.0 * w.a * d * w.c * std::exp(-w.a * d * d);
    }
    case Membership::Kind::Complement: {
        double sum = 0.0;
        for (int r = 0; r < count(); ++r) {
            if (r != rho) sum += weight_deriv(r, x);
        }
        return -sum;
    }
    case Membership::Kind::Custom:
        return w.dfn(x);
    }
    return 0.0;
}

Eigen::VectorXd MembershipFamily::normalize(double x) const {
    const int sj = count();
    Eigen::VectorXd w(sj);
    for (int r = 0; r < sj; ++r) w[r] = weight(r, x);
    const double denom = w.sum();
    if (denom < 1e-300) {
        std::ostringstream os;
        os << "membership family on dimension " << dimension_ + 1
           << ": normalization denominator " << denom << " at x = " << x;
        throw DegenerateDenominator(os.str());
    }
    return w / denom;
}

Eigen::VectorXd MembershipFamily::normalize_deriv(double x) const {
    const int sj = count();
    Eigen::VectorXd w(sj), dw(sj);
    for (int r = 0; r < sj; ++r) {
        w[r] = weight(r, x);
        dw[r] = weight_deriv(r, x);
    }
    const double denom = w.sum();
    if (denom < 1e-300) {
        std::ostringstream os;
        os << "membership family on dimension " << dimension_ + 1
           << ": normalization denominator " << denom << " at x = " << x;
        throw DegenerateDenominator(os.str());
    }
    const double ddenom = dw.sum();
    // quotient rule: (w' S - w S') / S^2
    return (dw * denom - w * ddenom) / (denom * denom);
}

bool MembershipFamily::complement_closed() const {
    int complements = 0;
    for (const Membership& m : members_) {
        if (m.kind == Membership::Kind::Complement) ++complements;
    }
    return complements == 1;
}

bool MembershipFamily::all_decaying() const {
    for (const Membership& m : members_) {
        if (m.kind == Membership::Kind::Custom) return false;
    }
    return true;
}

double TSModel::matrix_scale() const {
    double scale = 1.0;
    auto update = [&scale](const std::vector<Eigen::MatrixXd>& mats) {
        for (const Eigen::MatrixXd& M : mats) {
            if (M.size() > 0) scale = std::max(scale, M.cwiseAbs().maxCoeff());
        }
    };
    update(A);
    update(B);
    update(C);
    return scale;
}

bool TSModel::full_combination() const {
    long prod = 1;
    for (const MembershipFamily& f : families) prod *= f.count();
    if (prod != s) return false;
    std::set<std::vector<int>> seen;
    for (int i = 0; i < s; ++i) {
        std::vector<int> key(n);
        for (int j = 0; j < n; ++j) key[j] = ordinals(i, j);
        seen.insert(key);
    }
    return static_cast<long>(seen.size()) == prod;
}

Eigen::VectorXd basis(const TSModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.n) throw DimensionMismatch("basis: state size mismatch");
    std::vector<Eigen::VectorXd> mu(model.n);
    for (int j = 0; j < model.n; ++j) mu[j] = model.families[j].normalize(x[j]);
    Eigen::VectorXd h(model.s);
    for (int i = 0; i < model.s; ++i) {
        double prod = 1.0;
        for (int j = 0; j < model.n; ++j) prod *= mu[j][model.ordinals(i, j)];
        h[i] = prod;
    }
    return h;
}

Eigen::MatrixXd basis_jacobian(const TSModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.n) throw DimensionMismatch("basis_jacobian: state size mismatch");
    std::vector<Eigen::VectorXd> mu(model.n), dmu(model.n);
    for (int j = 0; j < model.n; ++j) {
        mu[j] = model.families[j].normalize(x[j]);
        dmu[j] = model.families[j].normalize_deriv(x[j]);
    }
    Eigen::MatrixXd jac(model.s, model.n);
    for (int i = 0; i < model.s; ++i) {
        for (int j = 0; j < model.n; ++j) {
            double prod = dmu[j][model.ordinals(i, j)];
            for (int k = 0; k < model.n; ++k) {
                if (k != j) prod *= mu[k][model.ordinals(i, k)];
            }
            jac(i, j) = prod;
        }
    }
    return jac;
}

namespace {

// |x dmu^rho/dx| for the normalized membership on one dimension.
double mu_slope_mag(const MembershipFamily& fam, int rho, double x) {
    return std::abs(x * fam.normalize_deriv(x)[rho]);
}

// Golden-section refinement of a unimodal-ish bump around [lo, hi].
double golden_max(const MembershipFamily& fam, int rho, double lo, double hi) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = mu_slope_mag(fam, rho, c);
    double fd = mu_slope_mag(fam, rho, d);
    for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(a)); ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = mu_slope_mag(fam, rho, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = mu_slope_mag(fam, rho, d);
        }
    }
    return std::max(fc, fd);
}

struct SupResult {
    double sup = 0.0;
    BetaBounds::Method method = BetaBounds::Method::GridRefined;
};

SupResult slope_sup(const MembershipFamily& fam, int rho, double half) {
    const Membership& w = fam.member(rho);

    // Closed form: in a complement-closed family mu == w, and for a
    // zero-centered Gauss (or its complement) |x mu'| = 2ac x^2 e^{-a x^2},
    // maximized at x^2 = 1/a with value 2c/e.
    if (fam.complement_closed()) {
        const Membership* g = nullptr;
        if (w.kind == Membership::Kind::Gauss) {
            g = &w;
        } else if (w.kind == Membership::Kind::Complement && fam.count() == 2) {
            const Membership& other = fam.member(1 - rho);
            if (other.kind == Membership::Kind::Gauss) g = &other;
        }
        if (g != nullptr && g->m == 0.0 && half >= 1.0 / std::sqrt(g->a)) {
            return {2.0 * g->c / std::exp(1.0), BetaBounds::Method::ClosedForm};
        }
    }

    // Dense grid scan followed by golden-section refinement.
    const int grid = 20001;  // >= 1e4 points
    double best = 0.0;
    int best_k = 0;
    const double step = 2.0 * half / (grid - 1);
    for (int k = 0; k < grid; ++k) {
        const double x = -half + k * step;
        const double v = mu_slope_mag(fam, rho, x);
        if (v > best) {
            best = v;
            best_k = k;
        }
    }
    if ((best_k <= 1 || best_k >= grid - 2) && !fam.all_decaying()) {
        std::ostringstream os;
        os << "derivative bound for fuzzy set " << rho + 1 << " on dimension "
           << fam.dimension() + 1 << " peaks at the working-box edge; no finite bound";
        throw UnboundedDerivative(os.str());
    }
    const double lo = -half + std::max(0, best_k - 1) * step;
    const double hi = -half + std::min(grid - 1, best_k + 1) * step;
    return {std::max(best, golden_max(fam, rho, lo, hi)), BetaBounds::Method::GridRefined};
}

// Round up at the 4th decimal, with a one-grain floor to keep bounds positive.
double roundup4(double v) {
    const double up = std::ceil(v * 1e4 - 1e-9) / 1e4;
    return std::max(up, 1e-4);
}

} // namespace

BetaBounds beta_bounds(const TSModel& model) {
    BetaBounds out;
    out.raw_sup.resize(model.s, model.n);
    out.values.resize(model.s, model.n);
    out.method.assign(model.s, std::vector<BetaBounds::Method>(model.n));

    // Suprema are shared per (dimension, ordinal); compute each once.
    std::vector<std::vector<SupResult>> per_set(model.n);
    for (int j = 0; j < model.n; ++j) {
        const MembershipFamily& fam = model.families[j];
        per_set[j].resize(fam.count());
        for (int rho = 0; rho < fam.count(); ++rho) {
            per_set[j][rho] = slope_sup(fam, rho, model.box_halfwidth);
        }
    }

    double envelope = 0.0;
    for (int i = 0; i < model.s; ++i) {
        for (int j = 0; j < model.n; ++j) {
            const SupResult& r = per_set[j][model.ordinals(i, j)];
            out.raw_sup(i, j) = r.sup;
            out.method[i][j] = r.method;
            envelope = std::max(envelope, roundup4(r.sup));
        }
    }
    out.values.setConstant(model.s, model.n, envelope);
    out.beta = out.values.sum();
    return out;
}

std::vector<ModelIssue> validate(const TSModel& model) {
    std::vector<ModelIssue> issues;
    auto add = [&issues](const std::string& what) { issues.push_back({what}); };

    if (model.n <= 0) add("state dimension must be positive");
    if (model.s <= 0) add("rule count must be positive");
    if (static_cast<int>(model.families.size()) != model.n)
        add("membership family count does not match state dimension");
    if (static_cast<int>(model.A.size()) != model.s) add("A matrix count != rule count");
    if (static_cast<int>(model.C.size()) != model.s) add("C matrix count != rule count");
    if (model.p > 0 && static_cast<int>(model.B.size()) != model.s)
        add("B matrix count != rule count");
    if (model.ordinals.rows() != model.s || model.ordinals.cols() != model.n)
        add("ordinal table must be s x n");
    if (!issues.empty()) return issues;

    for (int i = 0; i < model.s; ++i) {
        if (model.A[i].rows() != model.n || model.A[i].cols() != model.n)
            add("A_" + std::to_string(i + 1) + " is not n x n");
        if (model.C[i].rows() != model.n || model.C[i].cols() != model.n)
            add("C_" + std::to_string(i + 1) + " is not n x n");
        if (model.p > 0 && (model.B[i].rows() != model.n || model.B[i].cols() != model.p))
            add("B_" + std::to_string(i + 1) + " is not n x p");
        for (int j = 0; j < model.n; ++j) {
            const int rho = model.ordinals(i, j);
            if (rho < 0 || rho >= model.families[j].count())
                add("rule " + std::to_string(i + 1) + " ordinal out of range on dimension " +
                    std::to_string(j + 1));
        }
    }
    if (!issues.empty()) return issues;

    std::set<std::vector<int>> seen;
    for (int i = 0; i < model.s; ++i) {
        std::vector<int> key(model.n);
        for (int j = 0; j < model.n; ++j) key[j] = model.ordinals(i, j);
        if (!seen.insert(key).second)
            add("duplicate rule: ordinal vector of rule " + std::to_string(i + 1) +
                " already used");
    }

    long prod = 1;
    for (const MembershipFamily& f : model.families) prod *= f.count();
    if (prod != model.s)
        add("incomplete rule base: " + std::to_string(model.s) + " rules but " +
            std::to_string(prod) + " ordinal combinations");

    // Partition of unity at sampled points along each axis and jointly.
    const int samples = 1000;
    for (int t = 0; t < samples; ++t) {
        Eigen::VectorXd x(model.n);
        for (int j = 0; j < model.n; ++j) {
            // low-discrepancy-ish deterministic sweep of the box
            const double u = std::fmod(0.5 + t * (0.5 + j) * 0.6180339887498949, 1.0);
            x[j] = (2.0 * u - 1.0) * model.box_halfwidth;
        }
        try {
            const Eigen::VectorXd h = basis(model, x);
            if (std::abs(h.sum() - 1.0) > 1e-12) {
                add("partition of unity violated at sampled state");
                break;
            }
            if ((h.array() < -1e-15).any() || (h.array() > 1.0 + 1e-12).any()) {
                add("basis function out of [0,1] at sampled state");
                break;
            }
        } catch (const DegenerateDenominator& e) {
            add(e.what());
            break;
        }
    }
    return issues;
}

} // namespace tstab
