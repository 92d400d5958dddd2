#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "evar/finite_hyp.hpp"
#include "evar/json_io.hpp"
#include "evar/measure.hpp"

using namespace evar;

TEST_CASE("expectation is a plain dot product", "[measure]") {
    // Dirac evaluation
    auto d = DiscreteMeasure::dirac(4, 2);
    REQUIRE(expectation(d, {5.0, -1.0, 7.5, 0.0}) == 7.5);
    // symmetric cancellation
    DiscreteMeasure half({0.5, 0.5});
    REQUIRE(expectation(half, {-1.0, 1.0}) == 0.0);
    // hand dot product 0.25*0 + 0.75*4
    DiscreteMeasure mu({0.25, 0.75});
    REQUIRE(expectation(mu, {0.0, 4.0}) == Catch::Approx(3.0).margin(1e-15));
    REQUIRE_THROWS_AS(expectation(mu, {1.0, 2.0, 3.0}), AlignmentError);
}

TEST_CASE("membership under the zero-mean bounded-variance constraints", "[measure]") {
    SampleGrid g({-1.0, 0.0, 1.0});
    auto hyp = builtin_constraints(BuiltinKind::mean_var, {{"sigma", 1.0}}, g);
    REQUIRE(membership(DiscreteMeasure({0.5, 0.0, 0.5}), hyp));
    REQUIRE_FALSE(membership(DiscreteMeasure::dirac(3, 2), hyp));
    Hypothesis zero(g, {ConstraintFunction({0.0, 0.0, 0.0})});
    REQUIRE(membership(DiscreteMeasure({0.2, 0.5, 0.3}), zero));
}

TEST_CASE("membership is monotone in the tolerance", "[measure][property]") {
    SampleGrid g({-1.0, 0.0, 1.0, 2.0});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<ConstraintFunction> cs;
        for (int k = 0; k < 2; ++k) {
            std::vector<double> v(4);
            for (double& x : v) x = 2.0 * u(rng) - 1.0;
            cs.push_back(ConstraintFunction(std::move(v)));
        }
        Hypothesis hyp(g, cs);
        std::vector<double> w(4);
        double mass = 0.0;
        for (double& x : w) mass += (x = u(rng));
        for (double& x : w) x /= mass;
        DiscreteMeasure mu(std::move(w));
        const double tol1 = 1e-6 * u(rng), tol2 = tol1 + 0.2 * u(rng);
        if (membership(mu, hyp, tol1)) REQUIRE(membership(mu, hyp, tol2));
    }
}

TEST_CASE("negligible points of the worked families", "[measure]") {
    // no negligible set for the mean-variance family on a wide grid
    SampleGrid g({-2.0, -1.0, 0.0, 1.0, 2.0});
    auto mv = builtin_constraints(BuiltinKind::mean_var, {{"sigma", 1.0}}, g);
    REQUIRE(negligible_points(mv).empty());

    // mean pinned at 3 is infeasible when the grid tops out at 2
    SampleGrid g2({0.0, 1.0, 2.0});
    Hypothesis pinned(g2, {ConstraintFunction({-3.0, -2.0, -1.0}), ConstraintFunction({3.0, 2.0, 1.0})});
    REQUIRE(negligible_points(pinned) == std::vector<std::size_t>{0, 1, 2});

    // indicator constraint kills exactly its point
    SampleGrid g3({0.0, 1.0});
    Hypothesis ind(g3, {ConstraintFunction({1.0, 0.0})});
    REQUIRE(negligible_points(ind) == std::vector<std::size_t>{0});
}

TEST_CASE("full-support member forces an empty negligible set", "[measure]") {
    SampleGrid g({-1.0, 0.0, 1.0});
    auto hyp = builtin_constraints(BuiltinKind::mean_var, {{"sigma", 1.0}}, g);
    DiscreteMeasure mu({0.25, 0.5, 0.25});
    REQUIRE(membership(mu, hyp));
    REQUIRE(negligible_points(hyp).empty());
}

TEST_CASE("constant functions integrate to their value", "[measure][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        std::vector<double> w(5);
        double mass = 0.0;
        for (double& x : w) mass += (x = u(rng) + 1e-3);
        for (double& x : w) x /= mass;
        DiscreteMeasure mu(std::move(w));
        const double c = 20.0 * u(rng) - 10.0;
        REQUIRE(expectation(mu, std::vector<double>(5, c)) == Catch::Approx(c).margin(1e-12));
    }
}

TEST_CASE("grid and measure invariants are enforced", "[measure]") {
    REQUIRE_THROWS_AS(SampleGrid(std::vector<double>{}), InputError);
    REQUIRE_THROWS_AS(SampleGrid({1.0, 1.0}), InputError);
    REQUIRE_THROWS_AS(SampleGrid({2.0, 1.0}), InputError);
    REQUIRE_THROWS_AS(SampleGrid::from_vectors({{0, 1}, {0, 1}}), InputError);
    REQUIRE_THROWS_AS(SampleGrid::from_vectors({{0, 1}, {0}}), InputError);
    REQUIRE_THROWS_AS(DiscreteMeasure({0.5, -0.1}), InputError);
    REQUIRE_THROWS_AS(ConstraintFunction({1.0, std::numeric_limits<double>::infinity()}), InputError);
    REQUIRE_THROWS_AS(EVariable::from_values({-0.5}), InputError);
    SampleGrid g({0.0, 1.0});
    REQUIRE_THROWS_AS(Hypothesis(g, {}), InputError);
    REQUIRE_THROWS_AS(Hypothesis(g, {ConstraintFunction({1.0, 2.0, 3.0})}), AlignmentError);
    REQUIRE(DiscreteMeasure({0.5, 0.5}).is_probability());
    REQUIRE_FALSE(DiscreteMeasure({0.5, 0.6}).is_probability());
}

TEST_CASE("extended constraint values admit -inf only by request", "[measure]") {
    const double ninf = -std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(ConstraintFunction({1.0, ninf}), InputError);
    auto g = ConstraintFunction::with_extended_values({1.0, ninf});
    REQUIRE(g.extended());
    REQUIRE_THROWS_AS(ConstraintFunction::with_extended_values({std::numeric_limits<double>::infinity()}),
                      InputError);
}

TEST_CASE("grid and measure JSON round trip", "[measure][json]") {
    SampleGrid g({-1.5, 0.0, 2.25});
    auto hyp = builtin_constraints(BuiltinKind::quantile, {{"alpha", 0.5}, {"q", 0.0}}, g);
    DiscreteMeasure mu({0.25, 0.25, 0.5});
    auto bundle = measure_bundle_to_json(g, hyp.constraints(), mu);
    auto text = canonical_dump(bundle);
    auto parsed = nlohmann::json::parse(text);
    auto g2 = grid_from_json(parsed.at("grid"));
    REQUIRE(g2 == g);
    auto cs2 = constraints_from_json(parsed.at("constraints"), g2);
    REQUIRE(cs2.size() == 1);
    REQUIRE(cs2[0].values() == hyp.constraints()[0].values());
    DiscreteMeasure mu2(parsed.at("weights").get<std::vector<double>>());
    REQUIRE(mu2.weights() == mu.weights());
}

TEST_CASE("range grids expand inclusively", "[measure][json]") {
    auto g = grid_from_json(nlohmann::json{{"min", -1.0}, {"max", 1.0}, {"step", 0.5}});
    REQUIRE(g.size() == 5);
    REQUIRE(g.scalar(0) == -1.0);
    REQUIRE(g.scalar(4) == 1.0);
}
