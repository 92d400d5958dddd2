#pragma once

#include <optional>
#include <vector>

#include "evar/common.hpp"
#include "evar/finite_hyp.hpp"
#include "evar/lp.hpp"
#include "evar/measure.hpp"

namespace evar {

enum class Verdict { e_variable, violated, hypothesis_empty };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::e_variable: return "e-variable";
        case Verdict::violated: return "violated";
        case Verdict::hypothesis_empty: return "hypothesis-empty";
    }
    return "?";
}

struct VerificationReport {
    double worst_value = 0.0;  // -inf when the hypothesis is empty
    std::optional<DiscreteMeasure> witness;
    Verdict verdict = Verdict::e_variable;
    std::vector<double> constraint_slack;  // -integral of g_i at the witness, >= ~0
    std::uint64_t grid_hash = 0;           // verdicts are grid-resolution statements
};

// Adversarial LP: maximize sum_x p_x h(x) over the discretized hypothesis.
// The candidate is an e-variable on this grid iff the optimum is <= 1 + tol.
inline VerificationReport worst_case_expectation(const EVariable& h, const Hypothesis& hyp,
                                                 double tol = kDefaultTol) {
    if (h.values.size() != hyp.grid_size())
        throw AlignmentError("worst_case_expectation: h not aligned with grid");
    VerificationReport rep;
    rep.grid_hash = hyp.grid().hash();
    auto sol = solve(detail::hypothesis_lp(hyp, h.values));
    if (sol.status == LpStatus::infeasible) {
        rep.verdict = Verdict::hypothesis_empty;
        rep.worst_value = -std::numeric_limits<double>::infinity();
        return rep;
    }
    if (sol.status != LpStatus::optimal)
        throw NumericalError("worst_case_expectation: unexpected LP status");
    rep.worst_value = sol.value;
    rep.witness = detail::measure_from_lp_point(sol.x);
    rep.verdict = sol.value <= 1.0 + tol ? Verdict::e_variable : Verdict::violated;
    for (const auto& g : hyp.constraints())
        rep.constraint_slack.push_back(-expectation(*rep.witness, g.values()));
    return rep;
}

// Every nonnegative function is an e-variable for the empty hypothesis.
inline bool is_evar_on_grid(const EVariable& h, const Hypothesis& hyp, double tol = kDefaultTol) {
    return worst_case_expectation(h, hyp, tol).verdict != Verdict::violated;
}

enum class MaximalityVerdict { maximal, dominated, undetermined };

inline const char* to_string(MaximalityVerdict v) {
    switch (v) {
        case MaximalityVerdict::maximal: return "maximal";
        case MaximalityVerdict::dominated: return "dominated";
        case MaximalityVerdict::undetermined: return "undetermined";
    }
    return "?";
}

struct MaximalityReport {
    MaximalityVerdict verdict = MaximalityVerdict::maximal;
    bool cq_holds = true;
    std::optional<EVariable> dominating;       // strict improvement when dominated
    std::optional<std::size_t> witness_index;  // grid point where it exceeds h
    double gap = 0.0;
    std::uint64_t grid_hash = 0;
};

// Searches for pi >= 0 with 1 + sum pi_i g_i >= h at all non-negligible
// points and a strict excess (> tol) at one of them; one LP per point. The
// per-point LP carries the extra row "excess at x0 <= 1" so it is always
// bounded; any strict improvement is preserved under that cap. If no point
// improves and the constraint qualification holds, h is maximal; if the CQ
// fails, maximality is undetermined at this grid.
inline MaximalityReport maximality_check(const EVariable& h, const Hypothesis& hyp,
                                         double tol = kDefaultTol) {
    if (h.values.size() != hyp.grid_size()) throw AlignmentError("maximality_check: h not aligned with grid");
    MaximalityReport rep;
    rep.grid_hash = hyp.grid().hash();

    const auto base = worst_case_expectation(h, hyp, tol);
    if (base.verdict == Verdict::violated)
        throw InputError("maximality_check: candidate fails the e-variable property on this grid");
    if (base.verdict == Verdict::hypothesis_empty) {
        // All sets are negligible: every e-variable is quasi-surely equal to
        // every other, hence maximal.
        rep.verdict = MaximalityVerdict::maximal;
        return rep;
    }

    const std::size_t d = hyp.num_constraints();
    const auto mask = support_mask(hyp, tol);
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < hyp.grid_size(); ++i)
        if (mask[i]) support.push_back(i);

    for (std::size_t i0 : support) {
        LinearProgram lp;
        lp.objective.resize(d);
        for (std::size_t k = 0; k < d; ++k) lp.objective[k] = hyp.constraints()[k].values()[i0];
        for (std::size_t i : support) {
            std::vector<double> row(d);
            for (std::size_t k = 0; k < d; ++k) row[k] = -hyp.constraints()[k].values()[i];
            lp.a_ub.push_back(std::move(row));
            lp.b_ub.push_back(1.0 - h.values[i]);
        }
        {
            std::vector<double> cap_row(d);
            for (std::size_t k = 0; k < d; ++k) cap_row[k] = hyp.constraints()[k].values()[i0];
            lp.a_ub.push_back(std::move(cap_row));
            lp.b_ub.push_back(h.values[i0]);  // excess = 1 + sum pi g - h <= 1
        }
        auto sol = solve(lp);
        if (sol.status == LpStatus::infeasible) continue;  // worst value in (1, 1+tol]
        if (sol.status != LpStatus::optimal) throw NumericalError("maximality_check: unexpected LP status");
        const double gap = 1.0 + sol.value - h.values[i0];
        if (gap > tol) {
            std::vector<double> pw = sol.x;
            for (double& v : pw) v = std::max(0.0, v);
            EVariable better = candidate_evar(PiVector(pw), hyp, tol);
            if (is_evar_on_grid(better, hyp, tol)) {
                rep.verdict = MaximalityVerdict::dominated;
                rep.dominating = std::move(better);
                rep.witness_index = i0;
                rep.gap = gap;
                rep.cq_holds = check_constraint_qualification(hyp, tol);
                return rep;
            }
        }
    }

    rep.cq_holds = check_constraint_qualification(hyp, tol);
    rep.verdict = rep.cq_holds ? MaximalityVerdict::maximal : MaximalityVerdict::undetermined;
    return rep;
}

}  // namespace evar
