#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "evar/common.hpp"
#include "evar/lp.hpp"
#include "evar/measure.hpp"

namespace evar {

// Nonnegative weight vector, one entry per constraint function.
struct PiVector {
    std::vector<double> weights;

    explicit PiVector(std::vector<double> w) : weights(std::move(w)) {
        for (double v : weights)
            if (!(v >= 0.0)) throw InputError("pi: weights must be nonnegative");
    }
};

struct MeanVarParams {
    double sigma;
    double alpha;
    double beta;

    MeanVarParams(double sigma_, double alpha_, double beta_) : sigma(sigma_), alpha(alpha_), beta(beta_) {
        if (!(sigma > 0.0)) throw InputError("mean_var: sigma must be positive");
    }
};

enum class BuiltinKind { mean_var, quantile, bounded_mean, zero_mean };

inline const char* to_string(BuiltinKind k) {
    switch (k) {
        case BuiltinKind::mean_var: return "mean_var";
        case BuiltinKind::quantile: return "quantile";
        case BuiltinKind::bounded_mean: return "bounded_mean";
        case BuiltinKind::zero_mean: return "zero_mean";
    }
    return "?";
}

inline std::optional<BuiltinKind> builtin_kind_from_string(const std::string& s) {
    if (s == "mean_var") return BuiltinKind::mean_var;
    if (s == "quantile") return BuiltinKind::quantile;
    if (s == "bounded_mean") return BuiltinKind::bounded_mean;
    if (s == "zero_mean") return BuiltinKind::zero_mean;
    return std::nullopt;
}

// Closed-form evaluation of a constraint descriptor at a scalar point.
inline double evaluate_form(const ConstraintForm& form, double x) {
    if (form.kind == "coordinate") return x;
    if (form.kind == "neg_coordinate") return -x;
    if (form.kind == "square_minus") {
        const double s = form.params.at("sigma");
        return x * x - s * s;
    }
    if (form.kind == "quantile") return form.params.at("alpha") - (x <= form.params.at("q") ? 1.0 : 0.0);
    if (form.kind == "mean_bound") return x - form.params.at("m");
    if (form.kind == "zero") return 0.0;
    throw InputError("unknown constraint form: " + form.kind);
}

// The worked families: mean_var(s) -> {x, -x, x^2 - s^2}; quantile(a, q) ->
// {a - 1_{x<=q}}; bounded_mean(m) on [0,1] -> {x - m}; zero_mean -> {x, -x}.
// Values are tabulated on the supplied scalar grid with descriptors attached.
inline Hypothesis builtin_constraints(BuiltinKind kind, const std::map<std::string, double>& params,
                                      const SampleGrid& grid) {
    if (grid.dim() != 1) throw InputError("builtin_constraints: scalar grid required");
    auto param = [&](const char* name) {
        auto it = params.find(name);
        if (it == params.end()) throw InputError(std::string("builtin_constraints: missing param ") + name);
        return it->second;
    };
    auto tabulate = [&](const ConstraintForm& form) {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) v[i] = evaluate_form(form, grid.scalar(i));
        return ConstraintFunction(std::move(v), form);
    };
    std::vector<ConstraintFunction> cs;
    switch (kind) {
        case BuiltinKind::mean_var: {
            const double sigma = param("sigma");
            if (!(sigma > 0.0)) throw InputError("mean_var: sigma must be positive");
            cs.push_back(tabulate({"coordinate", {}}));
            cs.push_back(tabulate({"neg_coordinate", {}}));
            cs.push_back(tabulate({"square_minus", {{"sigma", sigma}}}));
            break;
        }
        case BuiltinKind::quantile: {
            const double alpha = param("alpha");
            const double q = param("q");
            if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("quantile: alpha must be in (0,1)");
            cs.push_back(tabulate({"quantile", {{"alpha", alpha}, {"q", q}}}));
            break;
        }
        case BuiltinKind::bounded_mean: {
            const double m = param("m");
            if (!(m > 0.0 && m < 1.0)) throw InputError("bounded_mean: m must be in (0,1)");
            for (std::size_t i = 0; i < grid.size(); ++i)
                if (grid.scalar(i) < 0.0 || grid.scalar(i) > 1.0)
                    throw InputError("bounded_mean: grid must lie in [0,1]");
            cs.push_back(tabulate({"mean_bound", {{"m", m}}}));
            break;
        }
        case BuiltinKind::zero_mean: {
            cs.push_back(tabulate({"coordinate", {}}));
            cs.push_back(tabulate({"neg_coordinate", {}}));
            break;
        }
    }
    return Hypothesis(grid, std::move(cs));
}

// max(0, 1 + sum_i pi_i g_i) tabulated on the grid. `clipped` is set when the
// affine expression drops below -tol at a non-negligible point.
inline EVariable candidate_evar(const PiVector& pi, const Hypothesis& hyp, double tol = kDefaultTol) {
    if (pi.weights.size() != hyp.num_constraints())
        throw AlignmentError("candidate_evar: pi length must match constraint count");
    const std::size_t n = hyp.grid_size();
    std::vector<double> raw(n, 1.0);
    for (std::size_t k = 0; k < pi.weights.size(); ++k) {
        const auto& g = hyp.constraints()[k].values();
        for (std::size_t i = 0; i < n; ++i) raw[i] += pi.weights[k] * g[i];
    }
    EVariable h;
    h.form = EvarForm::affine_in_constraints;
    h.pi = pi.weights;
    h.values.resize(n);
    bool any_below = false;
    for (std::size_t i = 0; i < n; ++i) {
        h.values[i] = std::max(0.0, raw[i]);
        if (raw[i] < -tol) any_below = true;
    }
    if (any_below) {
        const auto mask = support_mask(hyp, tol);
        for (std::size_t i = 0; i < n; ++i)
            if (mask[i] && raw[i] < -tol) h.clipped = true;
    }
    return h;
}

// Membership of pi in the discretized feasible set: 1 + sum pi_i g_i >= -tol
// at every non-negligible grid point.
inline bool in_pi_phi(const PiVector& pi, const Hypothesis& hyp, double tol = kDefaultTol) {
    if (pi.weights.size() != hyp.num_constraints())
        throw AlignmentError("in_pi_phi: pi length must match constraint count");
    const auto mask = support_mask(hyp, tol);
    for (std::size_t i = 0; i < hyp.grid_size(); ++i) {
        if (!mask[i]) continue;
        double v = 1.0;
        for (std::size_t k = 0; k < pi.weights.size(); ++k)
            v += pi.weights[k] * hyp.constraints()[k].values()[i];
        if (v < -tol) return false;
    }
    return true;
}

// Closed-form membership over the whole real line for the built-in families;
// nullopt when the hypothesis does not carry a recognized set of descriptors.
inline std::optional<bool> in_pi_phi_analytic(const PiVector& pi, const Hypothesis& hyp) {
    const auto& cs = hyp.constraints();
    auto kind_of = [&](std::size_t i) -> std::string {
        return cs[i].form() ? cs[i].form()->kind : std::string();
    };
    if (cs.size() == 3 && kind_of(0) == "coordinate" && kind_of(1) == "neg_coordinate" &&
        kind_of(2) == "square_minus") {
        const double sigma = cs[2].form()->params.at("sigma");
        const double alpha = pi.weights[0] - pi.weights[1];
        const double beta = pi.weights[2] * sigma * sigma;
        const double v = sigma * sigma * alpha * alpha + (2.0 * beta - 1.0) * (2.0 * beta - 1.0);
        return v <= 1.0 + 1e-12;
    }
    if (cs.size() == 1 && kind_of(0) == "quantile") {
        const double alpha = cs[0].form()->params.at("alpha");
        return pi.weights[0] <= 1.0 / (1.0 - alpha) + 1e-12;
    }
    if (cs.size() == 1 && kind_of(0) == "mean_bound") {
        const double m = cs[0].form()->params.at("m");
        return pi.weights[0] <= 1.0 / m + 1e-12;
    }
    if (cs.size() == 2 && kind_of(0) == "coordinate" && kind_of(1) == "neg_coordinate")
        return std::abs(pi.weights[0] - pi.weights[1]) <= 1e-12;
    return std::nullopt;
}

// Ellipse criterion for the zero-mean bounded-variance family:
// sigma^2 alpha^2 + (2 beta - 1)^2 <= 1.
inline bool mean_var_maximal(const MeanVarParams& p) {
    const double v = p.sigma * p.sigma * p.alpha * p.alpha + (2.0 * p.beta - 1.0) * (2.0 * p.beta - 1.0);
    return v <= 1.0;
}

inline double mean_var_ellipse_value(const MeanVarParams& p) {
    return p.sigma * p.sigma * p.alpha * p.alpha + (2.0 * p.beta - 1.0) * (2.0 * p.beta - 1.0);
}

struct DominationResult {
    bool feasible = false;
    std::vector<double> pi;           // minimizes sum pi_i among certificates
    std::vector<double> certificate;  // Farkas multipliers per support point when infeasible
    std::vector<std::size_t> support; // grid indices the LP constrained
};

// Finds pi >= 0 with h(x) - 1 <= sum pi_i g_i(x) at every non-negligible grid
// point, minimizing sum pi_i as the canonical selection.
inline DominationResult dominating_weights(const EVariable& h, const Hypothesis& hyp,
                                           double tol = kDefaultTol) {
    if (h.values.size() != hyp.grid_size()) throw AlignmentError("dominating_weights: h not aligned with grid");
    const std::size_t d = hyp.num_constraints();
    const auto mask = support_mask(hyp, tol);

    DominationResult out;
    for (std::size_t i = 0; i < hyp.grid_size(); ++i)
        if (mask[i]) out.support.push_back(i);

    LinearProgram lp;
    lp.objective.assign(d, -1.0);  // maximize -sum pi = minimize sum pi
    for (std::size_t i : out.support) {
        std::vector<double> row(d);
        for (std::size_t k = 0; k < d; ++k) row[k] = -hyp.constraints()[k].values()[i];
        lp.a_ub.push_back(std::move(row));
        lp.b_ub.push_back(1.0 - h.values[i]);
    }
    auto sol = solve(lp);
    if (sol.status == LpStatus::infeasible) {
        out.feasible = false;
        out.certificate = sol.farkas_ub;
        return out;
    }
    if (sol.status != LpStatus::optimal) throw NumericalError("dominating_weights: unexpected LP status");
    out.feasible = true;
    out.pi = sol.x;
    for (double& v : out.pi) v = std::max(0.0, v);
    return out;
}

struct CqReport {
    bool holds = true;
    std::optional<std::size_t> witness_index;  // support point with a strict gap
    std::vector<double> pi, pi_prime;          // violating pair when CQ fails
    double max_gap = 0.0;
};

// Constraint qualification: conic combinations ordered quasi-surely must be
// quasi-surely equal. Violations are sought one LP per support point, with
// the normalization sum pi + sum pi' <= 1 (the condition is cone-homogeneous).
inline CqReport check_constraint_qualification_report(const Hypothesis& hyp, double tol = kDefaultTol) {
    const std::size_t d = hyp.num_constraints();
    const auto mask = support_mask(hyp, tol);
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < hyp.grid_size(); ++i)
        if (mask[i]) support.push_back(i);

    CqReport rep;
    auto delta_row = [&](std::size_t i) {
        // coefficients of sum_k (pi_k - pi'_k) g_k(x_i) over vars (pi, pi')
        std::vector<double> row(2 * d);
        for (std::size_t k = 0; k < d; ++k) {
            row[k] = hyp.constraints()[k].values()[i];
            row[d + k] = -hyp.constraints()[k].values()[i];
        }
        return row;
    };
    for (std::size_t i0 : support) {
        LinearProgram lp;
        // maximize delta(x0) where delta = sum (pi'_k - pi_k) g_k
        lp.objective = delta_row(i0);
        for (double& v : lp.objective) v = -v;
        for (std::size_t i : support) {
            lp.a_ub.push_back(delta_row(i));  // delta(x) >= 0  <=>  -delta(x) <= 0
            lp.b_ub.push_back(0.0);
        }
        lp.a_ub.push_back(std::vector<double>(2 * d, 1.0));  // normalization
        lp.b_ub.push_back(1.0);
        auto sol = solve(lp);
        if (sol.status != LpStatus::optimal) throw NumericalError("cq check: unexpected LP status");
        if (sol.value > rep.max_gap) rep.max_gap = sol.value;
        if (sol.value > tol) {
            rep.holds = false;
            rep.witness_index = i0;
            rep.pi.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(d));
            rep.pi_prime.assign(sol.x.begin() + static_cast<std::ptrdiff_t>(d), sol.x.end());
            return rep;
        }
    }
    return rep;
}

inline bool check_constraint_qualification(const Hypothesis& hyp, double tol = kDefaultTol) {
    return check_constraint_qualification_report(hyp, tol).holds;
}

}  // namespace evar
