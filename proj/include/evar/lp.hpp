#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "evar/common.hpp"

namespace evar {

// Dense LP in the form
//   maximize objective . x
//   subject to a_ub x <= b_ub, a_eq x = b_eq, lower <= x <= upper.
// lower defaults to 0, upper to none.
struct LinearProgram {
    std::vector<double> objective;
    std::vector<std::vector<double>> a_ub;
    std::vector<double> b_ub;
    std::vector<std::vector<double>> a_eq;
    std::vector<double> b_eq;
    std::vector<double> lower;  // empty -> all zeros
    std::vector<double> upper;  // empty -> none; +inf entries allowed

    std::size_t num_vars() const { return objective.size(); }

    void validate() const {
        auto check_rows = [&](const std::vector<std::vector<double>>& rows, const char* what) {
            for (const auto& row : rows) {
                if (row.size() != num_vars())
                    throw AlignmentError(std::string("lp: ") + what + " row width mismatch");
                for (double v : row)
                    if (!std::isfinite(v)) throw InputError(std::string("lp: non-finite entry in ") + what);
            }
        };
        for (double v : objective)
            if (!std::isfinite(v)) throw InputError("lp: non-finite objective entry");
        if (a_ub.size() != b_ub.size()) throw AlignmentError("lp: a_ub/b_ub length mismatch");
        if (a_eq.size() != b_eq.size()) throw AlignmentError("lp: a_eq/b_eq length mismatch");
        check_rows(a_ub, "a_ub");
        check_rows(a_eq, "a_eq");
        for (double v : b_ub)
            if (!std::isfinite(v)) throw InputError("lp: non-finite b_ub entry");
        for (double v : b_eq)
            if (!std::isfinite(v)) throw InputError("lp: non-finite b_eq entry");
        if (!lower.empty() && lower.size() != num_vars()) throw AlignmentError("lp: lower bound length mismatch");
        if (!upper.empty() && upper.size() != num_vars()) throw AlignmentError("lp: upper bound length mismatch");
        for (double v : lower)
            if (!std::isfinite(v)) throw InputError("lp: non-finite lower bound");
        for (double v : upper)
            if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
                throw InputError("lp: bad upper bound");
    }
};

enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
    }
    return "?";
}

struct LpSolution {
    LpStatus status = LpStatus::optimal;
    double value = 0.0;  // +inf when unbounded, -inf when infeasible
    std::vector<double> x;
    std::vector<double> dual_ub;  // one per a_ub row, >= 0
    std::vector<double> dual_eq;  // one per a_eq row, free sign
    // Infeasibility certificate y (>= 0 on ub rows): y.A >= 0 componentwise
    // over x >= lower while y.(b - A lower) < 0. (Covers user rows; LPs with
    // finite upper bounds fold those into internal rows not exposed here.)
    std::vector<double> farkas_ub;
    std::vector<double> farkas_eq;
    // Unboundedness certificate: feasible direction with objective . ray > 0.
    std::vector<double> ray;
    double primal_residual = 0.0;
    double slackness_residual = 0.0;
    double duality_gap = 0.0;
    int iterations = 0;
};

namespace detail {

class SimplexTableau {
  public:
    SimplexTableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), t_(rows * (cols + 1), 0.0) {}

    double& at(std::size_t r, std::size_t c) { return t_[r * (n_ + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return t_[r * (n_ + 1) + c]; }
    double& rhs(std::size_t r) { return t_[r * (n_ + 1) + n_]; }
    double rhs(std::size_t r) const { return t_[r * (n_ + 1) + n_]; }
    std::size_t rows() const { return m_; }

    void erase_row(std::size_t r) {
        t_.erase(t_.begin() + static_cast<std::ptrdiff_t>(r * (n_ + 1)),
                 t_.begin() + static_cast<std::ptrdiff_t>((r + 1) * (n_ + 1)));
        --m_;
    }

    void pivot(std::size_t pr, std::size_t pc, std::vector<double>& obj) {
        const double piv = at(pr, pc);
        for (std::size_t c = 0; c <= n_; ++c) at(pr, c) /= piv;
        at(pr, pc) = 1.0;
        for (std::size_t r = 0; r < m_; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= n_; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
        }
        const double fo = obj[pc];
        if (fo != 0.0) {
            for (std::size_t c = 0; c <= n_; ++c) obj[c] -= fo * at(pr, c);
            obj[pc] = 0.0;
        }
    }

  private:
    std::size_t m_, n_;
    std::vector<double> t_;
};

}  // namespace detail

// Certified dense simplex solve (Phase I / Phase II, Bland's rule).
// Optimal solutions satisfy
//   primal residual <= 1e-9 (1 + ||b||_inf),
//   complementary slackness residual <= 1e-8,
//   |primal - dual| <= 1e-8 (1 + |primal value|);
// violations raise NumericalError rather than returning a wrong status.
inline LpSolution solve(const LinearProgram& lp, int max_iterations = 10000) {
    lp.validate();
    constexpr double kPivotTol = 1e-9;
    constexpr double kRatioTieTol = 1e-12;
    const double inf = std::numeric_limits<double>::infinity();

    const std::size_t nv = lp.num_vars();
    std::vector<double> lb = lp.lower.empty() ? std::vector<double>(nv, 0.0) : lp.lower;

    // Shift to x = lb + x', x' >= 0; fold finite upper bounds in as extra <= rows.
    std::vector<std::vector<double>> rows_a = lp.a_ub;
    std::vector<double> rows_b = lp.b_ub;
    const std::size_t m_ub_user = lp.a_ub.size();
    for (std::size_t i = 0; i < m_ub_user; ++i) rows_b[i] -= dot(rows_a[i], lb);
    if (!lp.upper.empty()) {
        for (std::size_t j = 0; j < nv; ++j) {
            if (lp.upper[j] == inf) continue;
            if (lp.upper[j] < lb[j]) {
                LpSolution s;
                s.status = LpStatus::infeasible;
                s.value = -inf;
                s.farkas_ub.assign(m_ub_user, 0.0);
                s.farkas_eq.assign(lp.a_eq.size(), 0.0);
                return s;
            }
            std::vector<double> row(nv, 0.0);
            row[j] = 1.0;
            rows_a.push_back(std::move(row));
            rows_b.push_back(lp.upper[j] - lb[j]);
        }
    }
    const std::size_t m_ub = rows_a.size();
    for (std::size_t i = 0; i < lp.a_eq.size(); ++i) {
        rows_a.push_back(lp.a_eq[i]);
        rows_b.push_back(lp.b_eq[i] - dot(lp.a_eq[i], lb));
    }
    const std::size_t m = rows_a.size();
    const std::size_t m_eq = lp.a_eq.size();

    double b_norm = 0.0;
    for (double v : lp.b_ub) b_norm = std::max(b_norm, std::abs(v));
    for (double v : lp.b_eq) b_norm = std::max(b_norm, std::abs(v));
    double b_norm_shifted = 0.0;
    for (double v : rows_b) b_norm_shifted = std::max(b_norm_shifted, std::abs(v));
    const double feas_tol = 1e-9 * (1.0 + b_norm_shifted);

    // Column layout: [x' | slacks (one per ub row) | artificials | rhs].
    std::vector<int> row_sign(m, 1);
    std::vector<int> art_col(m, -1);
    std::size_t n_art = 0;
    for (std::size_t r = 0; r < m; ++r) {
        if (rows_b[r] < 0.0) row_sign[r] = -1;
        if (r >= m_ub || row_sign[r] < 0) ++n_art;
    }
    const std::size_t slack_begin = nv;
    const std::size_t art_begin = nv + m_ub;
    const std::size_t ncols = nv + m_ub + n_art;

    detail::SimplexTableau tab(m, ncols);
    std::vector<int> basis(m, -1);
    {
        std::size_t next_art = art_begin;
        for (std::size_t r = 0; r < m; ++r) {
            const double s = static_cast<double>(row_sign[r]);
            for (std::size_t j = 0; j < nv; ++j) tab.at(r, j) = s * rows_a[r][j];
            tab.rhs(r) = s * rows_b[r];
            if (r < m_ub) tab.at(r, slack_begin + r) = s;  // slack keeps meaning b - a.x >= 0
            if (r >= m_ub || row_sign[r] < 0) {
                art_col[r] = static_cast<int>(next_art);
                tab.at(r, next_art) = 1.0;
                basis[r] = static_cast<int>(next_art);
                ++next_art;
            } else {
                basis[r] = static_cast<int>(slack_begin + r);
            }
        }
    }

    // The column whose original coefficients were e_r; reading it through the
    // final tableau yields B^-1 e_r, hence the row duals.
    auto unit_col = [&](std::size_t r) -> std::size_t {
        return art_col[r] >= 0 ? static_cast<std::size_t>(art_col[r]) : slack_begin + r;
    };

    int iterations = 0;
    auto run_simplex = [&](std::vector<double>& obj, std::size_t eligible_end) -> std::optional<std::size_t> {
        // Returns the entering column when unbounded, nullopt at optimum.
        for (;;) {
            std::size_t pc = ncols;
            for (std::size_t j = 0; j < eligible_end; ++j) {
                if (obj[j] > kPivotTol) {
                    pc = j;
                    break;  // Bland: lowest eligible index enters
                }
            }
            if (pc == ncols) return std::nullopt;
            std::size_t pr = tab.rows();
            double best_ratio = inf;
            for (std::size_t r = 0; r < tab.rows(); ++r) {
                const double a = tab.at(r, pc);
                if (a > kPivotTol) {
                    const double ratio = tab.rhs(r) / a;
                    if (ratio < best_ratio - kRatioTieTol) {
                        best_ratio = ratio;
                        pr = r;
                    } else if (ratio <= best_ratio + kRatioTieTol && pr != tab.rows() && basis[r] < basis[pr]) {
                        best_ratio = std::min(best_ratio, ratio);
                        pr = r;  // Bland: ties leave by lowest basic index
                    }
                }
            }
            if (pr == tab.rows()) return pc;
            tab.pivot(pr, pc, obj);
            basis[pr] = static_cast<int>(pc);
            if (++iterations > max_iterations)
                throw NumericalError("lp: numerically stalled after " + std::to_string(max_iterations) +
                                     " iterations");
        }
    };

    const double obj_offset = dot(lp.objective, lb);
    LpSolution sol;
    sol.dual_ub.assign(m_ub_user, 0.0);
    sol.dual_eq.assign(m_eq, 0.0);

    // Phase I: drive out the artificial variables.
    if (n_art > 0) {
        std::vector<double> obj1(ncols + 1, 0.0);
        for (std::size_t j = art_begin; j < ncols; ++j) obj1[j] = -1.0;
        for (std::size_t r = 0; r < m; ++r) {
            if (basis[r] >= static_cast<int>(art_begin)) {
                for (std::size_t c = 0; c <= ncols; ++c) obj1[c] += tab.at(r, c);
                obj1[static_cast<std::size_t>(basis[r])] = 0.0;
            }
        }
        if (run_simplex(obj1, ncols))
            throw NumericalError("lp: phase I reported unbounded, which cannot happen");
        const double art_sum = obj1[ncols];  // -(phase-I value) = residual infeasibility
        if (art_sum > feas_tol) {
            sol.status = LpStatus::infeasible;
            sol.value = -inf;
            sol.farkas_ub.assign(m_ub_user, 0.0);
            sol.farkas_eq.assign(m_eq, 0.0);
            for (std::size_t r = 0; r < m; ++r) {
                const std::size_t uc = unit_col(r);
                const double c_unit = uc >= art_begin ? -1.0 : 0.0;
                const double y = c_unit - obj1[uc];
                const double user_y = row_sign[r] * y;
                if (r < m_ub_user)
                    sol.farkas_ub[r] = std::max(0.0, user_y);
                else if (r >= m_ub)
                    sol.farkas_eq[r - m_ub] = user_y;
            }
            sol.iterations = iterations;
            return sol;
        }
        // Remove leftover basic artificials: zero their (tiny) values, then
        // pivot on the largest eligible entry; an all-zero row is redundant
        // and gets dropped.
        for (std::size_t r = 0; r < tab.rows();) {
            if (basis[r] < static_cast<int>(art_begin)) {
                ++r;
                continue;
            }
            tab.rhs(r) = 0.0;
            std::size_t pc = ncols;
            double best = 1e-7;
            for (std::size_t j = 0; j < art_begin; ++j) {
                if (std::abs(tab.at(r, j)) > best) {
                    best = std::abs(tab.at(r, j));
                    pc = j;
                }
            }
            if (pc == ncols) {
                tab.erase_row(r);
                basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(r));
            } else {
                tab.pivot(r, pc, obj1);
                basis[r] = static_cast<int>(pc);
                ++r;
            }
        }
    }

    // Phase II with the real objective; artificial columns barred from entering.
    std::vector<double> cost(ncols, 0.0);
    for (std::size_t j = 0; j < nv; ++j) cost[j] = lp.objective[j];
    std::vector<double> obj2(ncols + 1, 0.0);
    for (std::size_t j = 0; j < ncols; ++j) obj2[j] = cost[j];
    for (std::size_t r = 0; r < tab.rows(); ++r) {
        const double cb = cost[static_cast<std::size_t>(basis[r])];
        if (cb != 0.0) {
            for (std::size_t c = 0; c <= ncols; ++c) obj2[c] -= cb * tab.at(r, c);
        }
        obj2[static_cast<std::size_t>(basis[r])] = 0.0;
    }
    auto entering = run_simplex(obj2, art_begin);
    sol.iterations = iterations;

    if (entering) {
        sol.status = LpStatus::unbounded;
        sol.value = inf;
        std::vector<double> dir(ncols, 0.0);
        dir[*entering] = 1.0;
        for (std::size_t r = 0; r < tab.rows(); ++r)
            dir[static_cast<std::size_t>(basis[r])] = std::max(0.0, -tab.at(r, *entering));
        sol.ray.assign(dir.begin(), dir.begin() + static_cast<std::ptrdiff_t>(nv));
        return sol;
    }

    std::vector<double> xprime(ncols, 0.0);
    for (std::size_t r = 0; r < tab.rows(); ++r) xprime[static_cast<std::size_t>(basis[r])] = tab.rhs(r);
    sol.x.assign(nv, 0.0);
    for (std::size_t j = 0; j < nv; ++j) sol.x[j] = lb[j] + xprime[j];
    sol.value = dot(lp.objective, sol.x);

    // Duals for every original row remain readable through the unit columns
    // even if redundant rows were dropped.
    std::vector<double> user_dual(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) user_dual[r] = row_sign[r] * (0.0 - obj2[unit_col(r)]);
    for (std::size_t i = 0; i < m_ub_user; ++i) sol.dual_ub[i] = user_dual[i];
    for (std::size_t i = 0; i < m_eq; ++i) sol.dual_eq[i] = user_dual[m_ub + i];

    auto row_dot = [&](const std::vector<double>& a, const std::vector<double>& xs) {
        double s = 0.0;
        for (std::size_t j = 0; j < nv; ++j) s += a[j] * xs[j];
        return s;
    };

    double primal_res = 0.0;
    for (std::size_t i = 0; i < m_ub_user; ++i)
        primal_res = std::max(primal_res, row_dot(lp.a_ub[i], sol.x) - lp.b_ub[i]);
    for (std::size_t i = 0; i < m_eq; ++i)
        primal_res = std::max(primal_res, std::abs(row_dot(lp.a_eq[i], sol.x) - lp.b_eq[i]));
    for (std::size_t j = 0; j < nv; ++j) {
        primal_res = std::max(primal_res, lb[j] - sol.x[j]);
        if (!lp.upper.empty() && lp.upper[j] != inf) primal_res = std::max(primal_res, sol.x[j] - lp.upper[j]);
    }
    sol.primal_residual = primal_res;

    double cs = 0.0;
    for (std::size_t r = 0; r < m_ub; ++r)
        cs = std::max(cs, std::abs(user_dual[r] * (rows_b[r] - row_dot(rows_a[r], xprime))));
    for (std::size_t j = 0; j < nv; ++j) cs = std::max(cs, std::abs(obj2[j] * xprime[j]));
    sol.slackness_residual = cs;

    double dual_value = obj_offset;
    for (std::size_t r = 0; r < m; ++r) dual_value += user_dual[r] * rows_b[r];
    sol.duality_gap = std::abs(dual_value - sol.value);

    if (sol.primal_residual > 1e-9 * (1.0 + b_norm) || sol.slackness_residual > 1e-8 ||
        sol.duality_gap > 1e-8 * (1.0 + std::abs(sol.value)))
        throw NumericalError("lp: certification failed (primal " + format_double(sol.primal_residual) +
                             ", slackness " + format_double(sol.slackness_residual) + ", gap " +
                             format_double(sol.duality_gap) + ")");
    sol.status = LpStatus::optimal;
    return sol;
}

}  // namespace evar
