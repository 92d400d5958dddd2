#pragma once

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "evar/common.hpp"
#include "evar/measure.hpp"

namespace evar {

// Finite group acting on a grid by index permutations: element e sends grid
// point i to point e[i]. Closure under composition and inverse is checked
// exhaustively at construction (counting measure is the Haar measure here).
class FiniteGroupAction {
  public:
    using Perm = std::vector<std::size_t>;

    static FiniteGroupAction from_elements(std::vector<Perm> elements, std::vector<Perm> generators) {
        FiniteGroupAction g;
        g.elements_ = std::move(elements);
        g.generators_ = std::move(generators);
        g.check();
        return g;
    }

    // Closes the generating set under composition.
    static FiniteGroupAction from_generators(std::size_t grid_size, std::vector<Perm> generators) {
        for (const auto& p : generators)
            if (!is_bijection(p, grid_size)) throw InputError("group: generator is not a grid bijection");
        std::set<Perm> seen;
        Perm id(grid_size);
        std::iota(id.begin(), id.end(), 0);
        seen.insert(id);
        std::vector<Perm> frontier{id};
        while (!frontier.empty()) {
            std::vector<Perm> next;
            for (const auto& e : frontier) {
                for (const auto& gen : generators) {
                    Perm c = compose(gen, e);
                    if (seen.insert(c).second) next.push_back(std::move(c));
                }
            }
            frontier = std::move(next);
        }
        FiniteGroupAction g;
        g.elements_.assign(seen.begin(), seen.end());
        g.generators_ = std::move(generators);
        g.check();
        return g;
    }

    static FiniteGroupAction trivial(std::size_t grid_size) {
        Perm id(grid_size);
        std::iota(id.begin(), id.end(), 0);
        return from_elements({id}, {});
    }

    // sigma(x_i) = x_{e[i]} built from a point map; the grid must be closed
    // under the map.
    template <typename PointMap>
    static Perm index_perm_from_point_map(const SampleGrid& grid, PointMap&& map) {
        Perm e(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto image = map(grid.point(i));
            const auto j = grid.index_of(image);
            if (j < 0) throw InputError("group: grid is not closed under the action");
            e[i] = static_cast<std::size_t>(j);
        }
        return e;
    }

    // All coordinate permutations (the symmetric group on dim() letters).
    static FiniteGroupAction symmetric_coordinates(const SampleGrid& grid) {
        std::vector<std::size_t> coords(grid.dim());
        std::iota(coords.begin(), coords.end(), 0);
        std::vector<Perm> gens;
        // adjacent transpositions generate the whole group
        for (std::size_t k = 0; k + 1 < grid.dim(); ++k) {
            gens.push_back(index_perm_from_point_map(grid, [&](const std::vector<double>& p) {
                std::vector<double> q = p;
                std::swap(q[k], q[k + 1]);
                return q;
            }));
        }
        if (gens.empty()) return trivial(grid.size());
        return from_generators(grid.size(), std::move(gens));
    }

    // Cyclic rotation of coordinates.
    static FiniteGroupAction cyclic_coordinates(const SampleGrid& grid) {
        if (grid.dim() < 2) return trivial(grid.size());
        auto rot = index_perm_from_point_map(grid, [&](const std::vector<double>& p) {
            std::vector<double> q(p.size());
            for (std::size_t k = 0; k < p.size(); ++k) q[(k + 1) % p.size()] = p[k];
            return q;
        });
        return from_generators(grid.size(), {rot});
    }

    // Componentwise sign flips x -> (+-x_1, ..., +-x_d).
    static FiniteGroupAction sign_flips(const SampleGrid& grid) {
        std::vector<Perm> gens;
        for (std::size_t k = 0; k < grid.dim(); ++k) {
            gens.push_back(index_perm_from_point_map(grid, [&](const std::vector<double>& p) {
                std::vector<double> q = p;
                q[k] = -q[k];
                return q;
            }));
        }
        return from_generators(grid.size(), std::move(gens));
    }

    const std::vector<Perm>& elements() const { return elements_; }
    const std::vector<Perm>& generators() const { return generators_; }
    std::size_t order() const { return elements_.size(); }
    std::size_t grid_size() const { return elements_.front().size(); }

    std::size_t identity_index() const {
        for (std::size_t k = 0; k < elements_.size(); ++k) {
            bool id = true;
            for (std::size_t i = 0; i < elements_[k].size(); ++i)
                if (elements_[k][i] != i) id = false;
            if (id) return k;
        }
        throw NumericalError("group: identity not found");  // unreachable after check()
    }

    static Perm compose(const Perm& a, const Perm& b) {  // (a o b)[i] = a[b[i]]
        Perm c(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) c[i] = a[b[i]];
        return c;
    }

    static Perm inverse(const Perm& a) {
        Perm inv(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) inv[a[i]] = i;
        return inv;
    }

    bool contains(const Perm& p) const {
        return std::find(elements_.begin(), elements_.end(), p) != elements_.end();
    }

  private:
    FiniteGroupAction() = default;

    static bool is_bijection(const Perm& p, std::size_t n) {
        if (p.size() != n) return false;
        std::vector<bool> hit(n, false);
        for (std::size_t v : p) {
            if (v >= n || hit[v]) return false;
            hit[v] = true;
        }
        return true;
    }

    void check() const {
        if (elements_.empty()) throw InputError("group: no elements");
        const std::size_t n = grid_size();
        Perm id(n);
        std::iota(id.begin(), id.end(), 0);
        std::set<Perm> all(elements_.begin(), elements_.end());
        if (all.size() != elements_.size()) throw InputError("group: duplicate elements");
        if (!all.count(id)) throw InputError("group: identity missing");
        for (const auto& e : elements_) {
            if (!is_bijection(e, n)) throw InputError("group: element is not a bijection");
            if (!all.count(inverse(e))) throw InputError("group: not closed under inverse");
            for (const auto& f : elements_)
                if (!all.count(compose(e, f))) throw InputError("group: not closed under composition");
        }
    }

    std::vector<Perm> elements_;
    std::vector<Perm> generators_;
};

// f_pi(x) = |G|^-1 sum_sigma f(sigma x).
inline std::vector<double> orbit_average(const std::vector<double>& f, const FiniteGroupAction& group) {
    if (f.size() != group.grid_size()) throw AlignmentError("orbit_average: f not aligned with grid");
    std::vector<double> out(f.size(), 0.0);
    for (const auto& e : group.elements())
        for (std::size_t i = 0; i < f.size(); ++i) out[i] += f[e[i]];
    const double inv = 1.0 / static_cast<double>(group.order());
    for (double& v : out) v *= inv;
    return out;
}

// mu_pi = |G|^-1 sum_sigma sigma_* mu; invariant under every element.
inline DiscreteMeasure symmetrize_measure(const DiscreteMeasure& mu, const FiniteGroupAction& group) {
    if (mu.size() != group.grid_size()) throw AlignmentError("symmetrize_measure: measure not aligned");
    std::vector<double> out(mu.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(group.order());
    for (const auto& e : group.elements())
        for (std::size_t i = 0; i < mu.size(); ++i) out[e[i]] += inv * mu.weights()[i];
    return DiscreteMeasure(std::move(out));
}

// 1 + c u with u = f - f_pi, rescaled by the largest c <= 1 keeping the
// values nonnegative. Finite groups are unimodular, so u_pi = 0 and the
// result integrates to exactly 1 under every invariant measure.
inline EVariable exact_evar(const std::vector<double>& f, const FiniteGroupAction& group) {
    const auto f_pi = orbit_average(f, group);
    std::vector<double> u(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) u[i] = f[i] - f_pi[i];
    double umin = 0.0;
    for (double v : u) umin = std::min(umin, v);
    const double c = umin < -1.0 ? 1.0 / (-umin) : 1.0;
    EVariable h;
    h.form = EvarForm::symmetry;
    h.symmetry_f = f;
    h.values.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) h.values[i] = std::max(0.0, 1.0 + c * u[i]);
    return h;
}

struct EnvelopeReport {
    bool is_evariable = false;  // f_pi <= tol everywhere
    std::vector<double> f;
    std::vector<double> f_pi;
    double max_f_pi = 0.0;
    EVariable envelope;  // the dominating exact form 1 + f - f_pi
};

// Converse construction: f = h - 1; h is an e-variable for the invariant
// hypothesis iff f_pi <= 0, and then 1 + f - f_pi dominates h pointwise.
inline EnvelopeReport evar_upper_envelope(const EVariable& h, const FiniteGroupAction& group,
                                          double tol = kDefaultTol) {
    if (h.values.size() != group.grid_size()) throw AlignmentError("evar_upper_envelope: h not aligned");
    EnvelopeReport rep;
    rep.f.resize(h.values.size());
    for (std::size_t i = 0; i < h.values.size(); ++i) rep.f[i] = h.values[i] - 1.0;
    rep.f_pi = orbit_average(rep.f, group);
    rep.max_f_pi = *std::max_element(rep.f_pi.begin(), rep.f_pi.end());
    rep.is_evariable = rep.max_f_pi <= tol;
    rep.envelope.form = EvarForm::symmetry;
    rep.envelope.symmetry_f = rep.f;
    rep.envelope.values.resize(rep.f.size());
    for (std::size_t i = 0; i < rep.f.size(); ++i)
        rep.envelope.values[i] = std::max(0.0, 1.0 + rep.f[i] - rep.f_pi[i]);
    return rep;
}

// Indicator of each grid point: the default separating family on a finite grid.
inline std::vector<std::vector<double>> point_indicator_family(const SampleGrid& grid) {
    std::vector<std::vector<double>> fs(grid.size(), std::vector<double>(grid.size(), 0.0));
    for (std::size_t i = 0; i < grid.size(); ++i) fs[i][i] = 1.0;
    return fs;
}

// Constraints {sigma* f - f, -(sigma* f - f)} over the generating set and the
// separating family; the generated hypothesis is the invariant measures.
// Errors out naming a missing element when S0 fails to generate the group.
inline Hypothesis invariance_constraints(const SampleGrid& grid, const std::vector<std::vector<double>>& family,
                                         const std::vector<FiniteGroupAction::Perm>& generating_set,
                                         const FiniteGroupAction& group) {
    if (family.empty()) throw InputError("invariance_constraints: separating family must be nonempty");
    auto closure = FiniteGroupAction::from_generators(grid.size(), generating_set);
    for (const auto& e : group.elements()) {
        if (!closure.contains(e)) {
            std::string name = "(";
            for (std::size_t i = 0; i < e.size(); ++i) name += (i ? " " : "") + std::to_string(e[i]);
            name += ")";
            throw InputError("invariance_constraints: generating set misses element " + name);
        }
    }
    std::vector<ConstraintFunction> cs;
    for (const auto& f : family) {
        if (f.size() != grid.size()) throw AlignmentError("invariance_constraints: family not aligned");
        for (const auto& e : generating_set) {
            std::vector<double> v(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) v[i] = f[e[i]] - f[i];
            std::vector<double> neg(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) neg[i] = -v[i];
            cs.push_back(ConstraintFunction(std::move(v)));
            cs.push_back(ConstraintFunction(std::move(neg)));
        }
    }
    return Hypothesis(grid, std::move(cs));
}

}  // namespace evar
