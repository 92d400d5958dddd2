#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "evar/adversary.hpp"
#include "evar/common.hpp"
#include "evar/measure.hpp"

namespace evar {

// m functions on the grid together with their prescribed integrals.
struct MomentSpec {
    std::vector<std::vector<double>> functions;
    std::vector<double> targets;

    MomentSpec(std::vector<std::vector<double>> fs, std::vector<double> ts)
        : functions(std::move(fs)), targets(std::move(ts)) {
        if (functions.empty() || functions.size() != targets.size())
            throw InputError("moment spec: need m >= 1 functions with matching targets");
        for (const auto& f : functions) {
            if (f.size() != functions.front().size()) throw AlignmentError("moment spec: ragged functions");
            for (double v : f)
                if (!std::isfinite(v)) throw InputError("moment spec: non-finite function value");
        }
        for (double t : targets)
            if (!std::isfinite(t)) throw InputError("moment spec: non-finite target");
    }

    static MomentSpec from_measure(const DiscreteMeasure& mu, std::vector<std::vector<double>> fs) {
        std::vector<double> ts;
        ts.reserve(fs.size());
        for (const auto& f : fs) ts.push_back(expectation(mu, f));
        return MomentSpec(std::move(fs), std::move(ts));
    }

    std::size_t size() const { return functions.size(); }
};

namespace detail {

struct Qr {
    std::vector<std::vector<double>> r;   // reduced matrix
    std::vector<std::vector<double>> qt;  // Q transpose, n x n
};

// Householder QR of an n x k matrix (row-major), accumulating Q^T.
inline Qr householder_qr(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    const std::size_t k = n ? a[0].size() : 0;
    Qr f;
    f.qt.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) f.qt[i][i] = 1.0;
    std::vector<double> v(n, 0.0);
    for (std::size_t j = 0; j < std::min(k, n); ++j) {
        double norm2 = 0.0;
        for (std::size_t i = j; i < n; ++i) norm2 += a[i][j] * a[i][j];
        const double norm = std::sqrt(norm2);
        if (norm <= 1e-300) continue;
        const double alpha = a[j][j] > 0.0 ? -norm : norm;
        std::fill(v.begin(), v.end(), 0.0);
        v[j] = a[j][j] - alpha;
        for (std::size_t i = j + 1; i < n; ++i) v[i] = a[i][j];
        double vn2 = 0.0;
        for (std::size_t i = j; i < n; ++i) vn2 += v[i] * v[i];
        if (vn2 <= 1e-300) continue;
        auto reflect = [&](std::vector<std::vector<double>>& mat, std::size_t cols) {
            for (std::size_t c = 0; c < cols; ++c) {
                double t = 0.0;
                for (std::size_t i = j; i < n; ++i) t += v[i] * mat[i][c];
                const double f2 = 2.0 * t / vn2;
                if (f2 == 0.0) continue;
                for (std::size_t i = j; i < n; ++i) mat[i][c] -= f2 * v[i];
            }
        };
        reflect(a, k);
        reflect(f.qt, n);
    }
    f.r = std::move(a);
    return f;
}

// Least squares min ||A w - b|| for n x k with n >= k; false when A is
// numerically rank-deficient.
inline bool least_squares(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                          std::vector<double>& w) {
    const std::size_t n = a.size();
    const std::size_t k = n ? a[0].size() : 0;
    auto f = householder_qr(a);
    std::vector<double> qtb(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j2 = 0; j2 < n; ++j2) qtb[i] += f.qt[i][j2] * b[j2];
    w.assign(k, 0.0);
    for (std::size_t jj = k; jj-- > 0;) {
        double s = qtb[jj];
        for (std::size_t c = jj + 1; c < k; ++c) s -= f.r[jj][c] * w[c];
        if (std::abs(f.r[jj][jj]) < 1e-12) return false;
        w[jj] = s / f.r[jj][jj];
    }
    return true;
}

}  // namespace detail

// Carathéodory reduction: replace mu by a measure on at most m+1 atoms with
// the same m integrals and the same (unit) mass. Each step takes a kernel
// direction of the active-support moment matrix — the last column of an
// orthogonal factorization — and drives one weight to zero, ties broken by
// lowest index.
inline DiscreteMeasure barycenter_reduce(const DiscreteMeasure& mu, const MomentSpec& spec,
                                         double tol = 1e-10) {
    if (mu.size() != spec.functions.front().size())
        throw AlignmentError("barycenter_reduce: measure not aligned with moment functions");
    if (!mu.is_probability()) throw InputError("barycenter_reduce: measure must be a probability");
    for (std::size_t i = 0; i < spec.size(); ++i)
        if (std::abs(expectation(mu, spec.functions[i]) - spec.targets[i]) > 1e-8)
            throw InputError("barycenter_reduce: targets do not match the measure");

    const std::size_t m = spec.size();
    std::vector<double> w = mu.weights();
    auto support_of = [&]() {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (w[i] > 0.0) s.push_back(i);
        return s;
    };

    std::vector<std::size_t> support = support_of();
    const bool already_reduced = support.size() <= m + 1;
    while (support.size() > m + 1) {
        const std::size_t s = support.size();
        // Transposed moment matrix (s rows, m+1 cols: the m functions plus mass).
        std::vector<std::vector<double>> mt(s, std::vector<double>(m + 1, 0.0));
        for (std::size_t r = 0; r < s; ++r) {
            for (std::size_t k = 0; k < m; ++k) mt[r][k] = spec.functions[k][support[r]];
            mt[r][m] = 1.0;
        }
        auto f = detail::householder_qr(std::move(mt));
        std::vector<double> z(s);
        for (std::size_t r = 0; r < s; ++r) z[r] = f.qt[s - 1][r];  // last column of Q

        bool has_pos = false;
        for (double v : z)
            if (v > 1e-14) has_pos = true;
        if (!has_pos)
            for (double& v : z) v = -v;

        double step = std::numeric_limits<double>::infinity();
        std::size_t kill = s;
        for (std::size_t r = 0; r < s; ++r) {
            if (z[r] > 1e-14) {
                const double t = w[support[r]] / z[r];
                if (t < step - 1e-18) {
                    step = t;
                    kill = r;
                }
            }
        }
        if (kill == s) throw NumericalError("barycenter_reduce: no descent direction (degenerate kernel)");
        for (std::size_t r = 0; r < s; ++r) {
            w[support[r]] = std::max(0.0, w[support[r]] - step * z[r]);
        }
        w[support[kill]] = 0.0;
        support = support_of();
    }

    // Polish: re-solve the (consistent) moment system on the final support to
    // push residuals to machine scale; keep the step only if it helps.
    if (!already_reduced) {
        const std::size_t s = support.size();
        std::vector<std::vector<double>> a(m + 1, std::vector<double>(s, 0.0));
        std::vector<double> b(m + 1, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t c = 0; c < s; ++c) a[k][c] = spec.functions[k][support[c]];
            b[k] = spec.targets[k];
        }
        for (std::size_t c = 0; c < s; ++c) a[m][c] = 1.0;
        b[m] = 1.0;
        std::vector<double> wp;
        auto residual = [&](const std::vector<double>& cand) {
            double res = 0.0;
            for (std::size_t k = 0; k <= m; ++k) {
                double v = 0.0;
                for (std::size_t c = 0; c < s; ++c) v += a[k][c] * cand[c];
                res = std::max(res, std::abs(v - b[k]));
            }
            return res;
        };
        std::vector<double> cur(s);
        for (std::size_t c = 0; c < s; ++c) cur[c] = w[support[c]];
        if (detail::least_squares(a, b, wp)) {
            bool ok = true;
            for (double v : wp)
                if (v < -1e-12) ok = false;
            if (ok && residual(wp) <= residual(cur)) {
                for (std::size_t c = 0; c < s; ++c) w[support[c]] = std::max(0.0, wp[c]);
            }
        }
    }

    DiscreteMeasure nu{std::vector<double>(w)};
    for (std::size_t i = 0; i < spec.size(); ++i)
        if (std::abs(expectation(nu, spec.functions[i]) - spec.targets[i]) > tol)
            throw NumericalError("barycenter_reduce: moment residual above tolerance");
    if (std::abs(nu.mass() - 1.0) > tol) throw NumericalError("barycenter_reduce: mass drifted");
    return nu;
}

// Membership under relaxed integrability: each constraint needs a finite
// positive part and a (possibly -inf) total at most tol. Coincides with
// membership on finite grids with finite values.
inline bool relaxed_membership(const DiscreteMeasure& mu, const Hypothesis& hyp, double tol = kDefaultTol) {
    if (mu.size() != hyp.grid_size()) throw AlignmentError("relaxed_membership: measure not aligned");
    for (const auto& g : hyp.constraints()) {
        double pos = 0.0;
        double total = 0.0;
        bool minus_inf = false;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const double wv = mu.weights()[i];
            if (wv == 0.0) continue;
            const double gv = g.values()[i];
            if (gv == -std::numeric_limits<double>::infinity()) {
                minus_inf = true;
                continue;
            }
            pos += wv * std::max(gv, 0.0);
            total += wv * gv;
        }
        if (!std::isfinite(pos)) return false;  // positive part diverged
        if (!minus_inf && total > tol) return false;
    }
    return true;
}

struct EquivalenceReport {
    int trials = 0;
    int passes = 0;
    int failures = 0;
    double max_expectation = -std::numeric_limits<double>::infinity();
    double max_equality_residual = 0.0;
    std::size_t max_reduced_support = 0;
};

// Finite-constraint equivalence check: sample measures from the discretized
// (relaxed = plain, on a grid) hypothesis, reduce each against the moment
// functions {h, g_1..g_d}, and confirm the reduction lands in the hypothesis
// with the same h-integral, at most 1 + tol. The adversarial witness seeds
// the first trial so violating candidates fail visibly. Constraints unbounded
// below enter through their clipped versions g v c with c = -(max finite |g|)
// - 1, matching the proof construction; the reduced measure then satisfies
// the raw constraints a fortiori.
inline EquivalenceReport relaxation_equivalence_check(const Hypothesis& hyp, const EVariable& h, int trials,
                                                      double tol = 1e-8, std::uint64_t seed = 0x5eedbeef) {
    if (h.values.size() != hyp.grid_size())
        throw AlignmentError("relaxation_equivalence_check: h not aligned with grid");
    EquivalenceReport rep;
    const std::size_t n = hyp.grid_size();
    const std::size_t d = hyp.num_constraints();

    bool any_extended = false;
    std::vector<ConstraintFunction> clipped;
    for (const auto& g : hyp.constraints()) {
        if (!g.extended()) {
            clipped.push_back(g);
            continue;
        }
        any_extended = true;
        double finite_max = 0.0;
        for (double v : g.values())
            if (std::isfinite(v)) finite_max = std::max(finite_max, std::abs(v));
        const double floor_c = -finite_max - 1.0;
        std::vector<double> v = g.values();
        for (double& x : v) x = std::max(x, floor_c);
        clipped.push_back(ConstraintFunction(std::move(v)));
    }
    const Hypothesis hyp_c(hyp.grid(), std::move(clipped));

    std::vector<DiscreteMeasure> samples;
    const auto base = worst_case_expectation(h, hyp_c, tol);
    if (base.verdict == Verdict::hypothesis_empty) return rep;  // nothing to sample
    samples.push_back(*base.witness);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<DiscreteMeasure> vertices;
    vertices.push_back(*base.witness);
    while (static_cast<int>(samples.size()) < trials) {
        if (samples.size() % 2 == 0 || vertices.size() < 2) {
            std::vector<double> c(n);
            for (double& v : c) v = gauss(rng);
            auto sol = solve(detail::hypothesis_lp(hyp_c, std::move(c)));
            if (sol.status != LpStatus::optimal) throw NumericalError("equivalence check: sampler LP failed");
            auto vtx = detail::measure_from_lp_point(sol.x);
            vertices.push_back(vtx);
            samples.push_back(std::move(vtx));
        } else {
            // random convex combination of two sampled vertices
            const auto& a = vertices[static_cast<std::size_t>(unif(rng) * static_cast<double>(vertices.size()))];
            const auto& b = vertices[static_cast<std::size_t>(unif(rng) * static_cast<double>(vertices.size()))];
            const double t = unif(rng);
            std::vector<double> wv(n);
            for (std::size_t i = 0; i < n; ++i) wv[i] = t * a.weights()[i] + (1.0 - t) * b.weights()[i];
            samples.push_back(detail::measure_from_lp_point(std::move(wv)));
        }
    }

    std::vector<std::vector<double>> fs;
    fs.push_back(h.values);
    for (const auto& g : hyp_c.constraints()) fs.push_back(g.values());

    for (const auto& mu : samples) {
        ++rep.trials;
        const auto spec = MomentSpec::from_measure(mu, fs);
        const auto nu = barycenter_reduce(mu, spec);
        std::size_t nsupp = 0;
        for (double v : nu.weights())
            if (v > 0.0) ++nsupp;
        rep.max_reduced_support = std::max(rep.max_reduced_support, nsupp);
        const double em = expectation(mu, h.values);
        const double en = expectation(nu, h.values);
        rep.max_expectation = std::max(rep.max_expectation, em);
        rep.max_equality_residual = std::max(rep.max_equality_residual, std::abs(em - en));
        const bool in_hyp = any_extended ? relaxed_membership(nu, hyp, 10.0 * tol)
                                         : membership(nu, hyp, 10.0 * tol);
        const bool ok = nsupp <= d + 2 && in_hyp && std::abs(em - en) <= tol && em <= 1.0 + tol;
        if (ok)
            ++rep.passes;
        else
            ++rep.failures;
    }
    return rep;
}

struct RelaxedDemoReport {
    int n = 0;
    double mass = 0.0;
    bool normalized = false;
    bool membership_base = false;       // the truncated geometric measure is in the hypothesis
    bool relaxed_with_negative = false; // relaxed membership once f0(x) = -2^x joins
    std::vector<double> partial_sums;   // partial sums of the f0 integral, about -k
    double abs_integral_partial = 0.0;  // partial sum of |f0| integral, about n
};

// Truncation of the counting-space counterexample: constraints f_k with
// f_k(x) = 1 off x = k and 1 - 2^k at x = k pin the geometric measure; the
// negative f0(x) = -2^x is relaxed-integrable but its absolute integral grows
// without bound (partial sum at n equals n).
inline RelaxedDemoReport relaxed_demo(int n, double tol = kDefaultTol) {
    if (n < 2 || n > 1000) throw InputError("relaxed-demo: n must be in [2, 1000]");
    RelaxedDemoReport rep;
    rep.n = n;

    std::vector<double> pts(static_cast<std::size_t>(n));
    std::vector<double> wv(static_cast<std::size_t>(n));
    for (int x = 1; x <= n; ++x) {
        pts[static_cast<std::size_t>(x - 1)] = x;
        wv[static_cast<std::size_t>(x - 1)] = std::ldexp(1.0, -x);
    }
    double raw_mass = 0.0;
    for (double v : wv) raw_mass += v;
    if (std::abs(raw_mass - 1.0) > 1e-12) {
        for (double& v : wv) v /= raw_mass;
        rep.normalized = true;
    }
    SampleGrid grid(pts);
    DiscreteMeasure mu{std::vector<double>(wv)};
    rep.mass = mu.mass();

    std::vector<ConstraintFunction> base;
    for (int k = 1; k <= n; ++k) {
        std::vector<double> f(static_cast<std::size_t>(n), 1.0);
        f[static_cast<std::size_t>(k - 1)] = 1.0 - std::ldexp(1.0, k);
        base.push_back(ConstraintFunction(std::move(f)));
    }
    Hypothesis hyp_base(grid, base);
    rep.membership_base = membership(mu, hyp_base, tol);

    std::vector<double> f0(static_cast<std::size_t>(n));
    for (int x = 1; x <= n; ++x) f0[static_cast<std::size_t>(x - 1)] = -std::ldexp(1.0, x);
    auto with_f0 = base;
    with_f0.push_back(ConstraintFunction::with_extended_values(std::vector<double>(f0)));
    Hypothesis hyp_ext(grid, with_f0);
    rep.relaxed_with_negative = relaxed_membership(mu, hyp_ext, tol);

    double s = 0.0, sa = 0.0;
    rep.partial_sums.reserve(static_cast<std::size_t>(n));
    for (int x = 1; x <= n; ++x) {
        s += wv[static_cast<std::size_t>(x - 1)] * f0[static_cast<std::size_t>(x - 1)];
        sa += wv[static_cast<std::size_t>(x - 1)] * std::abs(f0[static_cast<std::size_t>(x - 1)]);
        rep.partial_sums.push_back(s);
    }
    rep.abs_integral_partial = sa;
    return rep;
}

}  // namespace evar
