#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "evar/common.hpp"
#include "evar/lp.hpp"
#include "evar/measure.hpp"

namespace evar {

enum class PsiKind { gaussian, exponential, gamma, custom_table };

inline const char* to_string(PsiKind k) {
    switch (k) {
        case PsiKind::gaussian: return "gaussian";
        case PsiKind::exponential: return "exponential";
        case PsiKind::gamma: return "gamma";
        case PsiKind::custom_table: return "custom-table";
    }
    return "?";
}

// CGF-like function: nonnegative, convex, psi(0) = 0, effective domain
// [0, lambda_max) or [0, lambda_max]. Outside the domain evaluation is +inf,
// which also realizes the boundary constraint for open-at-max domains
// (e^{lambda x - inf} = 0).
class PsiFunction {
  public:
    static PsiFunction gaussian(double sigma) {
        if (!(sigma > 0.0)) throw InputError("psi gaussian: sigma must be positive");
        PsiFunction p;
        p.kind_ = PsiKind::gaussian;
        p.a_ = sigma;
        p.lambda_max_ = std::numeric_limits<double>::infinity();
        p.validate();
        return p;
    }

    // Centered exponential with the given scale: -log(1 - b l) - b l on [0, 1/b).
    static PsiFunction exponential(double scale) {
        if (!(scale > 0.0)) throw InputError("psi exponential: scale must be positive");
        PsiFunction p;
        p.kind_ = PsiKind::exponential;
        p.a_ = scale;
        p.lambda_max_ = 1.0 / scale;
        p.open_at_max_ = true;
        p.validate();
        return p;
    }

    // Centered gamma(shape k, scale t): -k log(1 - t l) - k t l on [0, 1/t).
    static PsiFunction gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0)) throw InputError("psi gamma: shape and scale must be positive");
        PsiFunction p;
        p.kind_ = PsiKind::gamma;
        p.a_ = scale;
        p.b_ = shape;
        p.lambda_max_ = 1.0 / scale;
        p.open_at_max_ = true;
        p.validate();
        return p;
    }

    // Piecewise-linear table on [0, lambdas.back()], closed at the right end.
    static PsiFunction custom_table(std::vector<double> lambdas, std::vector<double> values) {
        if (lambdas.size() != values.size() || lambdas.size() < 2)
            throw InputError("psi table: need matching lists with at least two nodes");
        if (lambdas.front() != 0.0) throw InputError("psi table: first node must be lambda = 0");
        for (std::size_t i = 1; i < lambdas.size(); ++i)
            if (!(lambdas[i] > lambdas[i - 1])) throw InputError("psi table: nodes must increase");
        for (double v : values)
            if (!std::isfinite(v)) throw InputError("psi table: non-finite value");
        PsiFunction p;
        p.kind_ = PsiKind::custom_table;
        p.table_l_ = std::move(lambdas);
        p.table_v_ = std::move(values);
        p.lambda_max_ = p.table_l_.back();
        p.validate();
        return p;
    }

    PsiKind kind() const { return kind_; }
    double lambda_max() const { return lambda_max_; }
    bool open_at_max() const { return open_at_max_; }
    double sigma() const { return a_; }
    double scale() const { return a_; }
    double shape() const { return b_; }

    double operator()(double lam) const {
        const double inf = std::numeric_limits<double>::infinity();
        if (lam < 0.0) return inf;
        switch (kind_) {
            case PsiKind::gaussian: return 0.5 * a_ * a_ * lam * lam;
            case PsiKind::exponential: {
                if (lam >= lambda_max_) return inf;
                return -std::log1p(-a_ * lam) - a_ * lam;
            }
            case PsiKind::gamma: {
                if (lam >= lambda_max_) return inf;
                return b_ * (-std::log1p(-a_ * lam) - a_ * lam);
            }
            case PsiKind::custom_table: {
                if (lam > lambda_max_) return inf;
                auto it = std::upper_bound(table_l_.begin(), table_l_.end(), lam);
                if (it == table_l_.begin()) return table_v_.front();
                std::size_t hi = static_cast<std::size_t>(it - table_l_.begin());
                if (hi == table_l_.size()) return table_v_.back();
                const std::size_t lo = hi - 1;
                const double t = (lam - table_l_[lo]) / (table_l_[hi] - table_l_[lo]);
                return table_v_[lo] + t * (table_v_[hi] - table_v_[lo]);
            }
        }
        return inf;
    }

    bool has_analytic_conjugate() const {
        return kind_ == PsiKind::gaussian || kind_ == PsiKind::exponential || kind_ == PsiKind::gamma;
    }

    // 0 on x <= 0 in all cases (psi >= 0 and infinite on the negative half-line).
    double analytic_conjugate(double x) const {
        if (x <= 0.0) return 0.0;
        switch (kind_) {
            case PsiKind::gaussian: return x * x / (2.0 * a_ * a_);
            case PsiKind::exponential: return x / a_ - std::log1p(x / a_);
            case PsiKind::gamma: return x / a_ - b_ * std::log1p(x / (b_ * a_));
            case PsiKind::custom_table: break;
        }
        throw InputError("psi: no analytic conjugate for this kind");
    }

  private:
    PsiFunction() = default;

    void validate() const {
        // psi(0) = 0; nonnegative and nondecreasing on samples; midpoint
        // convexity on sampled triples.
        if (std::abs((*this)(0.0)) > 1e-12) throw InputError("psi: psi(0) must be 0");
        const double probe_hi = std::isfinite(lambda_max_)
                                    ? (open_at_max_ ? lambda_max_ * (1.0 - 1e-6) : lambda_max_)
                                    : 1e3;
        const int n = 64;
        double prev = 0.0;
        std::vector<double> ls(static_cast<std::size_t>(n) + 1), vs(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) {
            const double lam = probe_hi * static_cast<double>(i) / n;
            const double v = (*this)(lam);
            if (std::isnan(v) || v < -1e-12) throw InputError("psi: negative value at sampled lambda");
            if (std::isfinite(v) && v < prev - 1e-12) throw InputError("psi: decreasing at sampled lambda");
            if (std::isfinite(v)) prev = v;
            ls[static_cast<std::size_t>(i)] = lam;
            vs[static_cast<std::size_t>(i)] = v;
        }
        for (int i = 0; i + 2 <= n; ++i) {  // overlapping triples so kinks cannot hide
            const double a = vs[static_cast<std::size_t>(i)], mid = vs[static_cast<std::size_t>(i + 1)],
                         b = vs[static_cast<std::size_t>(i + 2)];
            if (std::isfinite(a) && std::isfinite(b) && std::isfinite(mid) &&
                mid > 0.5 * (a + b) + 1e-10)
                throw InputError("psi: midpoint convexity violated at sampled triple");
        }
        // exact convexity of tables: node slopes must be nondecreasing
        for (std::size_t i = 2; i < table_l_.size(); ++i) {
            const double s0 = (table_v_[i - 1] - table_v_[i - 2]) / (table_l_[i - 1] - table_l_[i - 2]);
            const double s1 = (table_v_[i] - table_v_[i - 1]) / (table_l_[i] - table_l_[i - 1]);
            if (s1 < s0 - 1e-12) throw InputError("psi table: slopes must be nondecreasing (convexity)");
        }
    }

    PsiKind kind_ = PsiKind::gaussian;
    double a_ = 1.0;  // sigma or scale
    double b_ = 1.0;  // shape
    double lambda_max_ = std::numeric_limits<double>::infinity();
    bool open_at_max_ = false;
    std::vector<double> table_l_, table_v_;
};

// Numeric convex conjugate: sup over the domain of lambda x - psi(lambda),
// concave in lambda, located by a doubling bracket plus golden-section.
inline double psi_star_numeric(const PsiFunction& psi, double x) {
    if (x <= 0.0) return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    auto phi = [&](double lam) {
        const double v = psi(lam);
        return std::isfinite(v) ? lam * x - v : -inf;
    };
    double hi;
    if (std::isfinite(psi.lambda_max())) {
        hi = psi.open_at_max() ? psi.lambda_max() * (1.0 - 1e-12) : psi.lambda_max();
    } else {
        hi = 1.0;
        while (phi(2.0 * hi) > phi(hi)) {
            hi *= 2.0;
            if (hi > 1e15) return kValueCap;  // slope never exceeded: conjugate is infinite
        }
        hi *= 2.0;
    }
    double lo = 0.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = phi(c), fd = phi(d);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
        if (fc < fd) {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = phi(d);
        } else {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = phi(c);
        }
    }
    const double best = std::max({phi(lo), phi(hi), fc, fd, 0.0});
    return std::min(best, kValueCap);
}

// Convex conjugate; analytic closed form when the kind provides one.
inline double psi_star(const PsiFunction& psi, double x) {
    if (x <= 0.0) return 0.0;
    if (psi.has_analytic_conjugate()) return psi.analytic_conjugate(x);
    return psi_star_numeric(psi, x);
}

// Chernoff tail bound exp(-psi*(x)); equals 1 on x <= 0.
inline double chernoff_bound(const PsiFunction& psi, double x) { return std::exp(-psi_star(psi, x)); }

struct CappedValue {
    double value = 0.0;
    bool capped = false;
};

// g_lambda(x) = e^{lambda x - psi(lambda)} - 1, the constraint family.
// Overflow returns kValueCap with the flag set. psi = +inf (boundary of an
// open domain) yields the limit value -1.
inline CappedValue g_lambda_checked(const PsiFunction& psi, double lam, double x) {
    const double p = psi(lam);
    if (!std::isfinite(p)) return {-1.0, false};
    const double t = lam * x - p;
    if (t > 690.0) return {kValueCap, true};
    return {std::expm1(t), false};
}

inline double g_lambda(const PsiFunction& psi, double lam, double x) {
    return g_lambda_checked(psi, lam, x).value;
}

// One-sided limit of g_lambda as lambda increases to lambda_max, evaluated on
// a decreasing-gap sequence. Closed domains reduce to direct evaluation.
inline double boundary_g_limit(const PsiFunction& psi, double x) {
    if (!std::isfinite(psi.lambda_max())) throw InputError("boundary g: lambda_max is infinite");
    if (!psi.open_at_max()) return g_lambda(psi, psi.lambda_max(), x);
    double prev = 0.0;
    for (int k = 8; k <= 48; k += 8) {
        const double lam = psi.lambda_max() * (1.0 - std::ldexp(1.0, -k));
        const double v = g_lambda(psi, lam, x);
        if (k > 8 && std::abs(v - prev) < 1e-12) return v;
        prev = v;
    }
    return prev;
}

// Smallest lambda at which e^{lambda x - psi(lambda)} underflows for every
// point of the working grid; beyond it the constraints are numerically
// inactive. For finite domains the domain end is the cap.
inline double lambda_cap(const PsiFunction& psi, double x_max) {
    if (std::isfinite(psi.lambda_max())) return psi.lambda_max();
    const double xm = std::max(x_max, 0.0);
    auto gap = [&](double lam) { return psi(lam) - lam * xm; };
    double hi = 1.0;
    while (gap(hi) < 709.0) {
        hi *= 2.0;
        if (hi > 1e18) return 1e6;  // asymptotically linear psi: no finite cap exists
    }
    double lo = hi * 0.5;
    if (gap(0.0) >= 709.0) return 0.0;
    lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) < 709.0 ? lo : hi) = mid;
    }
    return hi;
}

// Node 0, then geometric nodes up to the cap. For finite domains the last
// node is lambda_max itself, carrying the boundary constraint.
inline std::vector<double> make_lambda_grid(const PsiFunction& psi, double x_max, int n = 256) {
    if (n < 2) throw InputError("lambda grid: need at least two nodes");
    const double cap = lambda_cap(psi, x_max);
    std::vector<double> nodes;
    nodes.push_back(0.0);
    if (cap <= 0.0) return nodes;
    const double lo = cap * 1e-4;
    const double ratio = std::pow(cap / lo, 1.0 / static_cast<double>(n - 2 > 0 ? n - 2 : 1));
    double lam = lo;
    for (int i = 0; i < n - 1; ++i) {
        nodes.push_back(std::min(lam, cap));
        lam *= ratio;
    }
    nodes.back() = cap;
    return nodes;
}

// Probability (or subprobability) mixture over lambda nodes.
struct LambdaMixture {
    std::vector<double> nodes;
    std::vector<double> weights;

    LambdaMixture(std::vector<double> nodes_, std::vector<double> weights_)
        : nodes(std::move(nodes_)), weights(std::move(weights_)) {
        if (nodes.size() != weights.size() || nodes.empty())
            throw InputError("mixture: nodes and weights must match and be nonempty");
        for (double l : nodes)
            if (std::isnan(l) || l < 0.0) throw InputError("mixture: nodes must be nonnegative");
        for (double w : weights)
            if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("mixture: weights must be nonnegative");
    }

    static LambdaMixture dirac(double lam) { return LambdaMixture({lam}, {1.0}); }

    double mass() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

// h(x) = sum_j w_j e^{lambda_j x - psi(lambda_j)}, the canonical e-variable
// family for sub-psi hypotheses.
inline EVariable mixture_evar(const PsiFunction& psi, const LambdaMixture& mix, const SampleGrid& grid) {
    if (grid.dim() != 1) throw InputError("mixture_evar: scalar grid required");
    if (std::abs(mix.mass() - 1.0) > 1e-12) throw InputError("mixture_evar: mixture must be a probability");
    EVariable h;
    h.form = EvarForm::subpsi_mixture;
    h.mixture_nodes = mix.nodes;
    h.mixture_weights = mix.weights;
    h.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < mix.nodes.size(); ++j) {
            auto g = g_lambda_checked(psi, mix.nodes[j], grid.scalar(i));
            if (g.capped) h.overflow = true;
            v += mix.weights[j] * (1.0 + g.value);
        }
        h.values[i] = std::min(v, kValueCap);
        if (v > kValueCap) h.overflow = true;
    }
    return h;
}

struct SubpsiCheck {
    bool ok = true;
    double worst_lambda = 0.0;
    double max_log_violation = -std::numeric_limits<double>::infinity();  // log MGF - psi
};

// MGF domination check in log space: log sum_i w_i e^{lambda x_i} <= psi(lambda)
// + log(1 + tol) at every lambda of the grid.
inline SubpsiCheck verify_subpsi(const DiscreteMeasure& mu, const SampleGrid& grid, const PsiFunction& psi,
                                 const std::vector<double>& lambda_grid, double tol = kDefaultTol) {
    if (mu.size() != grid.size()) throw AlignmentError("verify_subpsi: measure not aligned with grid");
    if (grid.dim() != 1) throw InputError("verify_subpsi: scalar grid required");
    if (!mu.is_probability()) throw InputError("verify_subpsi: measure must be a probability");
    SubpsiCheck out;
    for (double lam : lambda_grid) {
        const double p = psi(lam);
        if (!std::isfinite(p)) continue;  // constraint trivially satisfied
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (mu.weights()[i] > 0.0) mx = std::max(mx, std::log(mu.weights()[i]) + lam * grid.scalar(i));
        double s = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (mu.weights()[i] > 0.0) s += std::exp(std::log(mu.weights()[i]) + lam * grid.scalar(i) - mx);
        const double log_mgf = mx + std::log(s);
        const double viol = log_mgf - p;
        if (viol > out.max_log_violation) {
            out.max_log_violation = viol;
            out.worst_lambda = lam;
        }
        if (viol > std::log1p(tol)) out.ok = false;
    }
    return out;
}

struct TwoPointMeasure {
    SampleGrid grid;
    DiscreteMeasure nu;
    double y = 0.0;  // the offset used for the second atom -x0 - y
};

// Two-point sub-psi measure p delta_{x0} + (1-p) delta_{-x0-y}. For x0 <= 0
// the offset y = -x0 works directly; for x0 > 0 a doubling search on y is
// re-verified against the lambda grid.
inline TwoPointMeasure two_point_subpsi(const PsiFunction& psi, double x0, double p,
                                        int lambda_nodes = 256) {
    const double star = psi_star(psi, x0);
    if (star >= kValueCap) throw InputError("two_point_subpsi: x0 outside dom(psi*)");
    const double pmax = 0.5 * std::exp(-star);
    if (!(p >= 0.0) || p > pmax + 1e-12)
        throw InputError("two_point_subpsi: p must lie in [0, exp(-psi*(x0))/2]");

    auto build = [&](double y) -> TwoPointMeasure {
        const double x1 = -x0 - y;
        if (x1 == x0) return {SampleGrid({x0}), DiscreteMeasure({1.0}), y};
        if (x1 < x0) return {SampleGrid({x1, x0}), DiscreteMeasure({1.0 - p, p}), y};
        return {SampleGrid({x0, x1}), DiscreteMeasure({p, 1.0 - p}), y};
    };

    if (x0 <= 0.0) return build(-x0);

    const auto lgrid = make_lambda_grid(psi, x0, lambda_nodes);
    for (double y = 1.0; y <= 1e12; y *= 2.0) {
        auto tp = build(y);
        if (verify_subpsi(tp.nu, tp.grid, psi, lgrid).ok) return tp;
    }
    throw NumericalError("two_point_subpsi: no offset up to 1e12 passes verification (pathological psi)");
}

struct MixtureFit {
    bool feasible = false;
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> certificate;  // Farkas multipliers per x row when infeasible
};

// Discretized converse direction: find probability weights w on the lambda
// grid (node 0 always included) with h(x) <= sum_j w_j e^{lambda_j x -
// psi(lambda_j)} for all x of the grid. Infeasibility certifies (up to
// discretization) that h is not an e-variable.
inline MixtureFit dominate_by_mixture(const EVariable& h, const PsiFunction& psi,
                                      const std::vector<double>& lambda_grid, const SampleGrid& x_grid) {
    if (x_grid.dim() != 1) throw InputError("dominate_by_mixture: scalar grid required");
    if (h.values.size() != x_grid.size())
        throw AlignmentError("dominate_by_mixture: h not aligned with x grid");
    std::vector<double> nodes = lambda_grid;
    if (std::find(nodes.begin(), nodes.end(), 0.0) == nodes.end()) nodes.insert(nodes.begin(), 0.0);
    const std::size_t k = nodes.size();

    LinearProgram lp;
    lp.objective.assign(k, 0.0);  // pure feasibility; simplex picks a basic solution
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        std::vector<double> row(k);
        for (std::size_t j = 0; j < k; ++j)
            row[j] = -(1.0 + g_lambda(psi, nodes[j], x_grid.scalar(i)));
        lp.a_ub.push_back(std::move(row));
        lp.b_ub.push_back(-h.values[i]);
    }
    lp.a_eq.push_back(std::vector<double>(k, 1.0));
    lp.b_eq.push_back(1.0);

    MixtureFit out;
    out.nodes = nodes;
    auto sol = solve(lp);
    if (sol.status == LpStatus::infeasible) {
        out.feasible = false;
        out.certificate = sol.farkas_ub;
        return out;
    }
    if (sol.status != LpStatus::optimal) throw NumericalError("dominate_by_mixture: unexpected LP status");
    out.feasible = true;
    out.weights = sol.x;
    for (double& w : out.weights) w = std::max(0.0, w);
    return out;
}

}  // namespace evar
