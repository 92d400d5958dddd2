#include <catch2/catch_amalgamated.hpp>

#include "evar/lp.hpp"
#include "oracles.hpp"

using namespace evar;

TEST_CASE("simplex solves the basic probability LP", "[lp]") {
    LinearProgram lp;
    lp.objective = {1, 0};
    lp.a_eq = {{1, 1}};
    lp.b_eq = {1};
    auto s = solve(lp);
    REQUIRE(s.status == LpStatus::optimal);
    REQUIRE(s.value == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(s.x[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(s.x[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("constrained second moment over {-1,0,1}", "[lp]") {
    // maximize sum p_i x_i^2 over the simplex slice with mean 0, E[x^2] <= 1
    LinearProgram lp;
    lp.objective = {1, 0, 1};
    lp.a_ub = {{-1, 0, 1}, {1, 0, -1}, {0, -1, 0}};
    lp.b_ub = {0, 0, 0};
    lp.a_eq = {{1, 1, 1}};
    lp.b_eq = {1};
    auto s = solve(lp);
    REQUIRE(s.status == LpStatus::optimal);
    REQUIRE(s.value == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(s.x[0] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(s.x[2] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("infeasible LP carries a Farkas certificate", "[lp]") {
    LinearProgram lp;
    lp.objective = {1};
    lp.a_ub = {{1}};
    lp.b_ub = {-1};
    auto s = solve(lp);
    REQUIRE(s.status == LpStatus::infeasible);
    REQUIRE(s.value == -std::numeric_limits<double>::infinity());
    // y >= 0, y.A >= 0 over x >= 0, y.b < 0
    REQUIRE(s.farkas_ub[0] >= 0.0);
    REQUIRE(s.farkas_ub[0] * 1.0 >= -1e-9);
    REQUIRE(s.farkas_ub[0] * -1.0 < -1e-9);
}

TEST_CASE("unbounded LP carries a ray", "[lp]") {
    LinearProgram lp;
    lp.objective = {1, -1};
    lp.a_ub = {{-1, 1}};
    lp.b_ub = {0};
    auto s = solve(lp);
    REQUIRE(s.status == LpStatus::unbounded);
    REQUIRE(dot(lp.objective, s.ray) > 0.0);
    REQUIRE(dot(lp.a_ub[0], s.ray) <= 1e-12);
    for (double v : s.ray) REQUIRE(v >= 0.0);
}

TEST_CASE("duals satisfy strong duality and complementary slackness", "[lp]") {
    LinearProgram lp;
    lp.objective = {3, 2};
    lp.a_ub = {{1, 1}, {1, 0}};
    lp.b_ub = {4, 2};
    auto s = solve(lp);
    REQUIRE(s.status == LpStatus::optimal);
    REQUIRE(s.value == Catch::Approx(10.0).margin(1e-9));  // x = (2, 2)
    const double dual_value = s.dual_ub[0] * 4 + s.dual_ub[1] * 2;
    REQUIRE(dual_value == Catch::Approx(s.value).margin(1e-8));
    REQUIRE(s.dual_ub[0] >= -1e-12);
    REQUIRE(s.dual_ub[1] >= -1e-12);
    REQUIRE(s.slackness_residual <= 1e-8);
    REQUIRE(s.primal_residual <= 1e-9 * 5);
}

TEST_CASE("iteration guard raises an explicit numerical error", "[lp]") {
    LinearProgram lp;
    lp.objective = {1, 0};
    lp.a_eq = {{1, 1}};
    lp.b_eq = {1};
    REQUIRE_THROWS_AS(solve(lp, 0), NumericalError);
}

TEST_CASE("validation rejects malformed programs", "[lp]") {
    LinearProgram lp;
    lp.objective = {1.0, std::numeric_limits<double>::quiet_NaN()};
    REQUIRE_THROWS_AS(solve(lp), InputError);
    LinearProgram lp2;
    lp2.objective = {1, 1};
    lp2.a_ub = {{1}};  // wrong width
    lp2.b_ub = {0};
    REQUIRE_THROWS_AS(solve(lp2), AlignmentError);
}

TEST_CASE("random small LPs match exhaustive vertex enumeration", "[lp][property]") {
    std::mt19937_64 rng(20240311);
    int optimal = 0, infeasible = 0, unbounded = 0;
    for (int trial = 0; trial < 250; ++trial) {
        auto lp = oracle::random_small_lp(rng);
        auto expected = oracle::solve(lp);
        auto got = solve(lp);
        switch (expected.status) {
            case oracle::Status::optimal:
                ++optimal;
                REQUIRE(got.status == LpStatus::optimal);
                REQUIRE(got.value == Catch::Approx(expected.value).margin(1e-9));
                break;
            case oracle::Status::infeasible:
                ++infeasible;
                REQUIRE(got.status == LpStatus::infeasible);
                break;
            case oracle::Status::unbounded:
                ++unbounded;
                REQUIRE(got.status == LpStatus::unbounded);
                break;
        }
    }
    // the generator must exercise all three statuses
    REQUIRE(optimal > 20);
    REQUIRE(infeasible > 5);
    REQUIRE(unbounded > 5);
}
