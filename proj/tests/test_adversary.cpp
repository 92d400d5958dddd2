#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "evar/adversary.hpp"
#include "oracles.hpp"

using namespace evar;

namespace {

Hypothesis random_hypothesis(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> npts(2, 7), ncon(1, 4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = npts(rng);
    std::vector<double> pts;
    double x = -2.0;
    for (int i = 0; i < n; ++i) {
        x += 0.3 + (u(rng) + 1.0);
        pts.push_back(x);
    }
    SampleGrid g(pts);
    std::vector<ConstraintFunction> cs;
    const int d = ncon(rng);
    for (int k = 0; k < d; ++k) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (double& w : v) w = u(rng);
        cs.push_back(ConstraintFunction(std::move(v)));
    }
    return Hypothesis(std::move(g), std::move(cs));
}

EVariable random_candidate(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 2.5);
    std::vector<double> v(n);
    for (double& w : v) w = u(rng);
    return EVariable::from_values(std::move(v));
}

}  // namespace

TEST_CASE("constant one is always worst-case one", "[adversary]") {
    SampleGrid g({-1.0, 0.0, 1.0});
    auto hyp = builtin_constraints(BuiltinKind::mean_var, {{"sigma", 1.0}}, g);
    auto rep = worst_case_expectation(EVariable::from_values({1.0, 1.0, 1.0}), hyp);
    REQUIRE(rep.verdict == Verdict::e_variable);
    REQUIRE(rep.worst_value == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("x^2 attains one with the two-point witness", "[adversary]") {
    SampleGrid g({-1.0, 0.0, 1.0});
    auto hyp = builtin_constraints(BuiltinKind::mean_var, {{"sigma", 1.0}}, g);
    auto rep = worst_case_expectation(EVariable::from_values({1.0, 0.0, 1.0}), hyp);
    REQUIRE(rep.verdict == Verdict::e_variable);
    REQUIRE(rep.worst_value == Catch::Approx(1.0).margin(1e-10));
    REQUIRE(rep.witness->weights()[0] == Catch::Approx(0.5).margin(1e-9));
    REQUIRE(rep.witness->weights()[2] == Catch::Approx(0.5).margin(1e-9));
    for (double s : rep.constraint_slack) REQUIRE(s >= -1e-9);
}

TEST_CASE("over-aggressive quantile candidate is violated at 1.125", "[adversary]") {
    SampleGrid g({-1.0, 1.0});
    auto hyp = builtin_constraints(BuiltinKind::quantile, {{"alpha", 0.5}, {"q", 0.0}}, g);
    auto h = candidate_evar(PiVector({2.5}), hyp);  // clipped to 0 at x = -1
    REQUIRE(h.values[0] == 0.0);
    REQUIRE(h.values[1] == Catch::Approx(2.25).margin(1e-12));
    auto rep = worst_case_expectation(h, hyp);
    REQUIRE(rep.verdict == Verdict::violated);
    REQUIRE(rep.worst_value == Catch::Approx(1.125).margin(1e-9));
    REQUIRE(rep.witness->weights()[0] == Catch::Approx(0.5).margin(1e-9));
    REQUIRE(rep.witness->weights()[1] == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("empty hypothesis accepts every nonnegative function", "[adversary]") {
    SampleGrid g({0.0, 1.0, 2.0});
    Hypothesis pinned(g, {ConstraintFunction({-3.0, -2.0, -1.0}), ConstraintFunction({3.0, 2.0, 1.0})});
    auto rep = worst_case_expectation(EVariable::from_values({50.0, 60.0, 70.0}), pinned);
    REQUIRE(rep.verdict == Verdict::hypothesis_empty);
    REQUIRE(is_evar_on_grid(EVariable::from_values({50.0, 60.0, 70.0}), pinned));
}

TEST_CASE("is_evar_on_grid thresholds at one", "[adversary]") {
    SampleGrid g({-1.0, 0.0, 1.0});
    auto hyp = builtin_constraints(BuiltinKind::mean_var, {{"sigma", 1.0}}, g);
    REQUIRE(is_evar_on_grid(EVariable::from_values({1.0, 0.0, 1.0}), hyp));
    REQUIRE_FALSE(is_evar_on_grid(EVariable::from_values({1.5, 1.5, 1.5}), hyp));
}

TEST_CASE("maximality verdicts on the worked families", "[adversary]") {
    SampleGrid g3({-1.0, 0.0, 1.0});
    auto zm = builtin_constraints(BuiltinKind::zero_mean, {}, g3);
    auto m1 = maximality_check(EVariable::from_values({1.0, 1.0, 1.0}), zm);
    REQUIRE(m1.verdict == MaximalityVerdict::maximal);

    SampleGrid g5({-2.0, -1.0, 0.0, 1.0, 2.0});
    auto mv = builtin_constraints(BuiltinKind::mean_var, {{"sigma", 1.0}}, g5);
    auto m2 = maximality_check(EVariable::from_values(std::vector<double>(5, 0.5)), mv);
    REQUIRE(m2.verdict == MaximalityVerdict::dominated);
    REQUIRE(m2.dominating);
    // the dominating candidate improves strictly somewhere and stays an e-variable
    REQUIRE(m2.gap > kDefaultTol);
    REQUIRE(is_evar_on_grid(*m2.dominating, mv));

    std::vector<double> xsq(5);
    for (std::size_t i = 0; i < 5; ++i) xsq[i] = g5.scalar(i) * g5.scalar(i);
    auto m3 = maximality_check(EVariable::from_values(xsq), mv);
    REQUIRE(m3.verdict == MaximalityVerdict::maximal);
    REQUIRE(m3.cq_holds);
}

TEST_CASE("failing CQ yields an undetermined maximality verdict", "[adversary]") {
    SampleGrid g({0.0, 1.0});
    Hypothesis bad(g, {ConstraintFunction({-1.0, 0.0})});
    auto rep = maximality_check(EVariable::from_values({1.0, 1.0}), bad);
    REQUIRE_FALSE(rep.cq_holds);
    REQUIRE(rep.verdict == MaximalityVerdict::undetermined);
}

TEST_CASE("precondition violation is surfaced", "[adversary]") {
    SampleGrid g({-1.0, 0.0, 1.0});
    auto hyp = builtin_constraints(BuiltinKind::mean_var, {{"sigma", 1.0}}, g);
    REQUIRE_THROWS_AS(maximality_check(EVariable::from_values({2.0, 2.0, 2.0}), hyp), InputError);
}

TEST_CASE("duality bridge: adversary vs dominating weights", "[adversary][property]") {
    std::mt19937_64 rng(20240311);
    for (int inst = 0; inst < 40; ++inst) {
        auto hyp = random_hypothesis(rng);
        for (int c = 0; c < 5; ++c) {
            auto h = random_candidate(rng, hyp.grid_size());
            const bool evar = is_evar_on_grid(h, hyp, 1e-8);
            const bool dom = dominating_weights(h, hyp, 1e-8).feasible;
            REQUIRE(evar == dom);
        }
    }
}

TEST_CASE("worst value matches vertex enumeration", "[adversary][property]") {
    std::mt19937_64 rng(424242);
    for (int inst = 0; inst < 25; ++inst) {
        auto hyp = random_hypothesis(rng);
        auto h = random_candidate(rng, hyp.grid_size());
        auto rep = worst_case_expectation(h, hyp);
        auto expected = oracle::solve(detail::hypothesis_lp(hyp, h.values));
        if (expected.status == oracle::Status::infeasible) {
            REQUIRE(rep.verdict == Verdict::hypothesis_empty);
        } else {
            REQUIRE(expected.status == oracle::Status::optimal);
            REQUIRE(rep.worst_value == Catch::Approx(expected.value).margin(1e-8));
        }
    }
}

TEST_CASE("witnesses satisfy membership at 10x tolerance", "[adversary][property]") {
    std::mt19937_64 rng(7777);
    for (int inst = 0; inst < 30; ++inst) {
        auto hyp = random_hypothesis(rng);
        auto rep = worst_case_expectation(random_candidate(rng, hyp.grid_size()), hyp);
        if (rep.verdict == Verdict::hypothesis_empty) continue;
        REQUIRE(membership(*rep.witness, hyp, 10.0 * kDefaultTol));
    }
}

TEST_CASE("worst-case expectation is monotone in the candidate", "[adversary][property]") {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int inst = 0; inst < 25; ++inst) {
        auto hyp = random_hypothesis(rng);
        auto h1 = random_candidate(rng, hyp.grid_size());
        auto h2 = h1;
        for (double& v : h2.values) v += u(rng);
        auto r1 = worst_case_expectation(h1, hyp);
        auto r2 = worst_case_expectation(h2, hyp);
        if (r1.verdict == Verdict::hypothesis_empty) continue;
        REQUIRE(r1.worst_value <= r2.worst_value + 1e-9);
    }
}
