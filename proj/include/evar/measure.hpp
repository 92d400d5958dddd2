#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evar/common.hpp"
#include "evar/lp.hpp"

namespace evar {

// Finite ordered set of sample-space points standing in for the sample space.
// Scalar grids are strictly increasing; vector grids (dimension >= 2) must be
// duplicate-free.
class SampleGrid {
  public:
    explicit SampleGrid(std::vector<double> scalar_points) {
        if (scalar_points.empty()) throw InputError("grid: empty");
        points_.reserve(scalar_points.size());
        for (std::size_t i = 0; i < scalar_points.size(); ++i) {
            if (!std::isfinite(scalar_points[i])) throw InputError("grid: non-finite point");
            if (i > 0 && scalar_points[i] <= scalar_points[i - 1])
                throw InputError("grid: scalar points must be strictly increasing");
            points_.push_back({scalar_points[i]});
        }
    }

    static SampleGrid from_vectors(std::vector<std::vector<double>> pts) {
        if (pts.empty()) throw InputError("grid: empty");
        const std::size_t d = pts.front().size();
        if (d == 0) throw InputError("grid: zero-dimensional point");
        for (const auto& p : pts) {
            if (p.size() != d) throw InputError("grid: mixed point dimensions");
            for (double v : p)
                if (!std::isfinite(v)) throw InputError("grid: non-finite point");
        }
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                if (pts[i] == pts[j]) throw InputError("grid: duplicate point");
        if (d == 1) {
            for (std::size_t i = 1; i < pts.size(); ++i)
                if (pts[i][0] <= pts[i - 1][0])
                    throw InputError("grid: scalar points must be strictly increasing");
        }
        SampleGrid g;
        g.points_ = std::move(pts);
        return g;
    }

    std::size_t size() const { return points_.size(); }
    std::size_t dim() const { return points_.front().size(); }

    double scalar(std::size_t i) const {
        if (dim() != 1) throw InputError("grid: scalar() on a vector grid");
        return points_[i][0];
    }

    std::vector<double> scalars() const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = scalar(i);
        return out;
    }

    const std::vector<double>& point(std::size_t i) const { return points_[i]; }
    const std::vector<std::vector<double>>& points() const { return points_; }

    // Exact-coordinate lookup; -1 when absent. Used by group actions, where
    // images of grid points must be grid points bitwise.
    std::ptrdiff_t index_of(const std::vector<double>& p) const {
        for (std::size_t i = 0; i < points_.size(); ++i)
            if (points_[i] == p) return static_cast<std::ptrdiff_t>(i);
        return -1;
    }

    std::uint64_t hash() const {
        std::string s;
        for (const auto& p : points_) {
            for (double v : p) {
                s += format_double(v);
                s += ',';
            }
            s += ';';
        }
        return fnv1a64(s);
    }

    bool operator==(const SampleGrid& o) const { return points_ == o.points_; }

  private:
    SampleGrid() = default;
    std::vector<std::vector<double>> points_;
};

// Closed-form descriptor attached to constraint vectors produced from the
// built-in families; enables analytic evaluation off the grid.
struct ConstraintForm {
    std::string kind;  // coordinate | neg_coordinate | square_minus | quantile | mean_bound | zero
    std::map<std::string, double> params;

    bool operator==(const ConstraintForm&) const = default;
};

// One constraint function, tabulated on a grid. Values are finite by default;
// the relaxed-integrability demos opt in to -inf entries explicitly.
class ConstraintFunction {
  public:
    explicit ConstraintFunction(std::vector<double> values, std::optional<ConstraintForm> form = {})
        : values_(std::move(values)), form_(std::move(form)) {
        if (values_.empty()) throw InputError("constraint: empty value vector");
        for (double v : values_)
            if (!std::isfinite(v)) throw InputError("constraint: non-finite value");
    }

    static ConstraintFunction with_extended_values(std::vector<double> values,
                                                   std::optional<ConstraintForm> form = {}) {
        if (values.empty()) throw InputError("constraint: empty value vector");
        for (double v : values)
            if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
                throw InputError("constraint: +inf/NaN not representable");
        ConstraintFunction g;
        g.values_ = std::move(values);
        g.form_ = std::move(form);
        return g;
    }

    const std::vector<double>& values() const { return values_; }
    const std::optional<ConstraintForm>& form() const { return form_; }
    bool extended() const {
        for (double v : values_)
            if (!std::isfinite(v)) return true;
        return false;
    }

  private:
    ConstraintFunction() = default;
    std::vector<double> values_;
    std::optional<ConstraintForm> form_;
};

// Hypothesis generated by a nonempty constraint list over one shared grid:
// the probability measures integrating every constraint to a nonpositive value.
class Hypothesis {
  public:
    Hypothesis(SampleGrid grid, std::vector<ConstraintFunction> constraints)
        : grid_(std::move(grid)), constraints_(std::move(constraints)) {
        if (constraints_.empty()) throw InputError("hypothesis: constraint list must be nonempty");
        for (const auto& g : constraints_)
            if (g.values().size() != grid_.size())
                throw AlignmentError("hypothesis: constraint not aligned with grid");
    }

    const SampleGrid& grid() const { return grid_; }
    const std::vector<ConstraintFunction>& constraints() const { return constraints_; }
    std::size_t num_constraints() const { return constraints_.size(); }
    std::size_t grid_size() const { return grid_.size(); }

  private:
    SampleGrid grid_;
    std::vector<ConstraintFunction> constraints_;
};

// Nonnegative weights on grid points; a probability measure when the mass is
// 1 within 1e-12.
class DiscreteMeasure {
  public:
    explicit DiscreteMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
        if (weights_.empty()) throw InputError("measure: empty weight vector");
        for (double w : weights_) {
            if (!std::isfinite(w)) throw InputError("measure: non-finite weight");
            if (w < 0.0) throw InputError("measure: negative weight");
        }
    }

    static DiscreteMeasure dirac(std::size_t n, std::size_t at) {
        std::vector<double> w(n, 0.0);
        w.at(at) = 1.0;
        return DiscreteMeasure(std::move(w));
    }

    static DiscreteMeasure uniform(std::size_t n) {
        return DiscreteMeasure(std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }

    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return weights_.size(); }

    double mass() const {
        double s = 0.0;
        for (double w : weights_) s += w;
        return s;
    }

    bool is_probability(double tol = 1e-12) const { return std::abs(mass() - 1.0) <= tol; }

  private:
    std::vector<double> weights_;
};

enum class EvarForm { raw, affine_in_constraints, subpsi_mixture, symmetry };

inline const char* to_string(EvarForm f) {
    switch (f) {
        case EvarForm::raw: return "raw";
        case EvarForm::affine_in_constraints: return "affine_in_constraints";
        case EvarForm::subpsi_mixture: return "subpsi_mixture";
        case EvarForm::symmetry: return "symmetry";
    }
    return "?";
}

// Candidate e-variable: nonnegative values on the grid plus the closed-form
// tag it was built from. `clipped` records max(0, .) truncation at a
// non-negligible point; `overflow` records capping at kValueCap.
struct EVariable {
    std::vector<double> values;
    EvarForm form = EvarForm::raw;
    std::vector<double> pi;                           // affine_in_constraints
    std::vector<double> mixture_nodes;                // subpsi_mixture
    std::vector<double> mixture_weights;              //
    std::vector<double> symmetry_f;                   // symmetry
    bool clipped = false;
    bool overflow = false;

    static EVariable from_values(std::vector<double> v) {
        EVariable h;
        for (double x : v) {
            if (std::isnan(x)) throw InputError("evariable: NaN value");
            if (x < 0.0) throw InputError("evariable: negative value");
        }
        h.values = std::move(v);
        return h;
    }
};

// Sum_i weights_i f_i, a plain dot product. Throws AlignmentError on size
// mismatch.
inline double expectation(const DiscreteMeasure& mu, const std::vector<double>& f) {
    return dot(mu.weights(), f);
}

inline double expectation(const DiscreteMeasure& mu, const EVariable& h) {
    return dot(mu.weights(), h.values);
}

// Integral membership check: expectation(mu, g) <= tol for every constraint.
// Integrability is automatic on finite grids.
inline bool membership(const DiscreteMeasure& mu, const Hypothesis& hyp, double tol = kDefaultTol) {
    if (mu.size() != hyp.grid_size()) throw AlignmentError("membership: measure not aligned with grid");
    if (!mu.is_probability()) throw InputError("membership: measure is not a probability");
    for (const auto& g : hyp.constraints())
        if (expectation(mu, g.values()) > tol) return false;
    return true;
}

namespace detail {

// Feasible region of the discretized hypothesis: p >= 0, sum p = 1,
// sum_x p_x g_i(x) <= 0 for every constraint.
inline LinearProgram hypothesis_lp(const Hypothesis& hyp, std::vector<double> objective) {
    LinearProgram lp;
    lp.objective = std::move(objective);
    for (const auto& g : hyp.constraints()) {
        lp.a_ub.push_back(g.values());
        lp.b_ub.push_back(0.0);
    }
    lp.a_eq.push_back(std::vector<double>(hyp.grid_size(), 1.0));
    lp.b_eq.push_back(1.0);
    return lp;
}

// Clamp stray negative zeros out of an LP vertex and renormalize to unit mass.
inline DiscreteMeasure measure_from_lp_point(std::vector<double> p) {
    double mass = 0.0;
    for (double& v : p) {
        if (v < 0.0) v = 0.0;
        mass += v;
    }
    if (mass <= 0.0) throw NumericalError("lp point has no mass");
    for (double& v : p) v /= mass;
    return DiscreteMeasure(std::move(p));
}

}  // namespace detail

// Indices whose maximal mass over the discretized hypothesis is <= tol.
// When the hypothesis is empty every index is negligible.
inline std::vector<std::size_t> negligible_points(const Hypothesis& hyp, double tol = kDefaultTol) {
    const std::size_t n = hyp.grid_size();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> c(n, 0.0);
        c[i] = 1.0;
        auto sol = solve(detail::hypothesis_lp(hyp, std::move(c)));
        if (sol.status == LpStatus::infeasible) {
            out.resize(n);
            for (std::size_t j = 0; j < n; ++j) out[j] = j;
            return out;
        }
        if (sol.value <= tol) out.push_back(i);
    }
    return out;
}

// Complement of negligible_points as a boolean mask, the set where
// quasi-sure statements must hold.
inline std::vector<bool> support_mask(const Hypothesis& hyp, double tol = kDefaultTol) {
    std::vector<bool> mask(hyp.grid_size(), true);
    for (std::size_t i : negligible_points(hyp, tol)) mask[i] = false;
    return mask;
}

}  // namespace evar
