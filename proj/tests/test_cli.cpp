#include <catch2/catch_amalgamated.hpp>

#include "evar/cli.hpp"

using namespace evar;
using nlohmann::json;

namespace {

json mean_var_config() {
    return json{{"schema", "evarkit/1"},
                {"command", "verify"},
                {"grid", json::array({-2.0, -1.0, 0.0, 1.0, 2.0})},
                {"constraints", json{{"kind", "mean_var"}, {"params", {{"sigma", 1.0}}}}},
                {"candidate", json{{"pi", json::array({0.0, 0.0, 1.0})}}}};
}

}  // namespace

TEST_CASE("verify command certifies the squared candidate", "[cli]") {
    auto res = cli::run(mean_var_config());
    REQUIRE(res.exit_code == cli::kExitOk);
    REQUIRE(res.report.at("verdict") == "e-variable");
    REQUIRE(res.report.at("worst_value").get<double>() == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(res.report.contains("config_hash"));
    REQUIRE(res.report.contains("grid_hash"));
}

TEST_CASE("verify command flags violations with exit code 2", "[cli]") {
    auto cfg = mean_var_config();
    cfg["candidate"] = json{{"values", json::array({1.5, 1.5, 1.5, 1.5, 1.5})}};
    auto res = cli::run(cfg);
    REQUIRE(res.exit_code == cli::kExitViolated);
    REQUIRE(res.report.at("verdict") == "violated");
}

TEST_CASE("verify reports empty hypotheses distinctly", "[cli]") {
    json cfg{{"command", "verify"},
             {"grid", json::array({0.0, 1.0, 2.0})},
             {"constraints", json::array({json{{"values", json::array({-3.0, -2.0, -1.0})}},
                                          json{{"values", json::array({3.0, 2.0, 1.0})}}})},
             {"candidate", json{{"values", json::array({9.0, 9.0, 9.0})}}}};
    auto res = cli::run(cfg);
    REQUIRE(res.exit_code == cli::kExitOk);
    REQUIRE(res.report.at("verdict") == "hypothesis-empty");
}

TEST_CASE("maximal command agrees with the ellipse verdict", "[cli]") {
    auto cfg = mean_var_config();
    cfg["command"] = "maximal";
    auto res = cli::run(cfg);
    REQUIRE(res.exit_code == cli::kExitOk);
    REQUIRE(res.report.at("maximality") == "maximal");
    REQUIRE(res.report.at("cq_holds") == true);
    REQUIRE(res.report.at("ellipse_maximal") == true);
    REQUIRE(res.report.at("adversary_verdict") == "e-variable");
    REQUIRE(res.report.at("in_pi_phi") == true);
    REQUIRE(res.report.at("ellipse_value").get<double>() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("etest multiplies per-observation e-values", "[cli]") {
    json cfg{{"command", "etest"},
             {"grid", json{{"min", 0.0}, {"max", 1.0}, {"step", 0.25}}},
             {"constraints", json{{"kind", "bounded_mean"}, {"params", {{"m", 0.5}}}}},
             {"candidate", json{{"pi", json::array({2.0})}}},
             {"alpha", 0.4}};
    auto res = cli::run(cfg, std::string("x\r\n0.9\r\n0.9\r\n"));
    REQUIRE(res.exit_code == cli::kExitOk);
    REQUIRE(res.report.at("evaluation") == "closed-form");
    const auto& obs = res.report.at("observations");
    REQUIRE(obs.size() == 2);
    REQUIRE(obs[0].at("e_value").get<double>() == Catch::Approx(1.8).margin(1e-12));
    REQUIRE(res.report.at("combined_e_value").get<double>() == Catch::Approx(3.24).margin(1e-12));
    REQUIRE(res.report.at("threshold").get<double>() == Catch::Approx(2.5).margin(1e-12));
    REQUIRE(res.report.at("reject") == true);
    REQUIRE(res.report.at("combination") == "product (extension)");
}

TEST_CASE("etest warns when raw candidates meet off-grid observations", "[cli]") {
    json cfg{{"command", "etest"},
             {"grid", json::array({-1.0, 0.0, 1.0})},
             {"constraints", json{{"kind", "zero_mean"}}},
             {"candidate", json{{"values", json::array({1.0, 1.0, 1.0})}}},
             {"alpha", 0.05}};
    auto res = cli::run(cfg, std::string("2.3\n0.0\n"));
    REQUIRE(res.report.at("evaluation") == "nearest-grid");
    REQUIRE(res.report.contains("warnings"));
    REQUIRE(res.report.at("warnings").size() == 1);
    REQUIRE(res.report.at("reject") == false);
    REQUIRE(res.report.at("decision") == "retain");
}

TEST_CASE("etest input validation carries diagnostics", "[cli]") {
    json cfg{{"command", "etest"},
             {"grid", json::array({-1.0, 0.0, 1.0})},
             {"constraints", json{{"kind", "zero_mean"}}},
             {"candidate", json{{"values", json::array({1.0, 1.0, 1.0})}}},
             {"alpha", 0.05}};
    REQUIRE_THROWS_AS(cli::run(cfg, std::nullopt), InputError);
    REQUIRE_THROWS_WITH(cli::run(cfg, std::string("x\n0.5\nbroken\n")),
                        Catch::Matchers::ContainsSubstring("line 3"));
    REQUIRE_THROWS_WITH(cli::run(cfg, std::string("0.5, 0.5\n")),
                        Catch::Matchers::ContainsSubstring("expected 1 column"));
    cfg["alpha"] = 1.5;
    REQUIRE_THROWS_AS(cli::run(cfg, std::string("0.5\n")), InputError);
}

TEST_CASE("reports are byte-identical across runs and reparse", "[cli]") {
    auto cfg = mean_var_config();
    auto a = canonical_dump(cli::run(cfg).report);
    auto b = canonical_dump(cli::run(cfg).report);
    REQUIRE(a == b);
    auto parsed = json::parse(a);
    REQUIRE(parsed.at("schema") == "evarkit/1");
    REQUIRE(parsed.at("command") == "verify");

    // different config -> different hash
    auto cfg2 = cfg;
    cfg2["tol"] = 1e-8;
    REQUIRE(cli::run(cfg2).report.at("config_hash") != cli::run(cfg).report.at("config_hash"));
}

TEST_CASE("subpsi command reports samples, checks, and the Chernoff table", "[cli]") {
    json cfg{{"command", "subpsi"},
             {"psi", json{{"kind", "gaussian"}, {"sigma", 1.0}}},
             {"grid", json::array({-1.0, 0.0, 1.0})},
             {"mixture", json{{"nodes", json::array({1.0})}, {"weights", json::array({1.0})}}},
             {"measure", json::array({0.5, 0.0, 0.5})}};
    auto res = cli::run(cfg);
    REQUIRE(res.exit_code == cli::kExitOk);
    REQUIRE(res.report.at("h_samples").size() == 3);
    REQUIRE(res.report.at("h_samples")[2].at("h").get<double>() ==
            Catch::Approx(std::exp(0.5)).margin(1e-12));
    REQUIRE(res.report.at("chernoff")[2].at("bound").get<double>() ==
            Catch::Approx(std::exp(-0.5)).margin(1e-12));
    REQUIRE(res.report.at("measure_check").at("sub_psi") == true);

    cfg["measure"] = json::array({0.0, 0.0, 1.0});  // delta_1 is not sub-gaussian
    auto res2 = cli::run(cfg);
    REQUIRE(res2.exit_code == cli::kExitViolated);
    REQUIRE(res2.report.at("measure_check").at("sub_psi") == false);
}

TEST_CASE("symmetry command runs both candidate paths", "[cli]") {
    json grid = json::array({json::array({0.0, 0.0}), json::array({0.0, 1.0}),
                             json::array({1.0, 0.0}), json::array({1.0, 1.0})});
    json cfg{{"command", "symmetry"},
             {"grid", grid},
             {"group", "s2"},
             {"candidate", json{{"symmetry_f", json::array({0.0, 0.0, 2.0, 0.0})}}}};
    auto res = cli::run(cfg);
    REQUIRE(res.exit_code == cli::kExitOk);
    REQUIRE(res.report.at("group").at("order") == 2);
    REQUIRE(res.report.at("exactness_residual").get<double>() <= 1e-10);

    json cfg2{{"command", "symmetry"},
              {"grid", grid},
              {"group", "s2"},
              {"candidate", json{{"values", json::array({1.1, 1.1, 1.1, 1.1})}}}};
    auto res2 = cli::run(cfg2);
    REQUIRE(res2.exit_code == cli::kExitViolated);
    REQUIRE(res2.report.at("verdict") == "violated");
}

TEST_CASE("reduce command reports the reduced support", "[cli]") {
    json cfg{{"command", "reduce"},
             {"grid", json{{"min", 1.0}, {"max", 10.0}, {"step", 1.0}}},
             {"weights", json::array({0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1})},
             {"moments", json{{"powers", json::array({1.0})}}}};
    auto res = cli::run(cfg);
    REQUIRE(res.exit_code == cli::kExitOk);
    REQUIRE(res.report.at("support_after").get<int>() <= 2);
    REQUIRE(res.report.at("residuals").at("moment_max").get<double>() <= 1e-10);
}

TEST_CASE("relaxed-demo command reports the divergence", "[cli]") {
    json cfg{{"command", "relaxed-demo"}, {"n", 40}};
    auto res = cli::run(cfg);
    REQUIRE(res.report.at("membership_base") == true);
    REQUIRE(res.report.at("relaxed_with_negative") == true);
    REQUIRE(res.report.at("partial_sum_final").get<double>() == Catch::Approx(-40.0).margin(1e-9));
}

TEST_CASE("config validation errors", "[cli]") {
    REQUIRE_THROWS_AS(cli::run(json{{"command", "frobnicate"}}), InputError);
    REQUIRE_THROWS_AS(cli::run(json{{"schema", "evarkit/2"}, {"command", "verify"}}), InputError);
    REQUIRE_THROWS_AS(cli::run(json::array()), InputError);
    auto cfg = mean_var_config();
    cfg.erase("candidate");
    REQUIRE_THROWS_AS(cli::run(cfg), InputError);
    cfg = mean_var_config();
    cfg["candidate"] = json{{"pi", json::array({-1.0, 0.0, 0.0})}};
    REQUIRE_THROWS_AS(cli::run(cfg), InputError);
}
