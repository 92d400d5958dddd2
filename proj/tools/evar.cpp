#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "evar/cli.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw evar::InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Inline JSON, a path, or @path.
nlohmann::json json_arg(const std::string& arg) {
    std::string text = arg;
    if (!arg.empty() && arg[0] == '@') {
        text = read_file(arg.substr(1));
    } else if (!arg.empty() && arg[0] != '{' && arg[0] != '[') {
        std::ifstream probe(arg);
        if (probe.good()) text = read_file(arg);
    }
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw evar::InputError(std::string("json parse error: ") + e.what());
    }
}

struct Options {
    std::string config_path;
    std::string data_path;
    std::string output_path;
    std::string grid, constraints, candidate, mixture, measure, moments, values, f;
    std::string psi_kind, group;
    double sigma = 1.0, scale = 1.0, shape = 1.0, alpha = 0.0, tol = 0.0;
    int n = 40;
    bool n_set = false;
};

nlohmann::json assemble(const std::string& command, const Options& opt) {
    nlohmann::json cfg;
    if (!opt.config_path.empty()) cfg = json_arg(opt.config_path);
    cfg["command"] = command;
    if (!cfg.contains("schema")) cfg["schema"] = "evarkit/1";
    if (!opt.grid.empty()) cfg["grid"] = json_arg(opt.grid);
    if (!opt.constraints.empty()) cfg["constraints"] = json_arg(opt.constraints);
    if (!opt.candidate.empty()) cfg["candidate"] = json_arg(opt.candidate);
    if (!opt.values.empty()) cfg["candidate"] = nlohmann::json{{"values", json_arg(opt.values)}};
    if (!opt.f.empty()) cfg["candidate"] = nlohmann::json{{"symmetry_f", json_arg(opt.f)}};
    if (!opt.mixture.empty()) cfg["candidate"] = nlohmann::json{{"mixture", json_arg(opt.mixture)}};
    if (!opt.measure.empty()) {
        auto m = json_arg(opt.measure);
        if (m.is_object()) {  // bundle {"grid": ..., "weights": ...}
            if (m.contains("grid")) cfg["grid"] = m.at("grid");
            if (m.contains("constraints")) cfg["constraints"] = m.at("constraints");
            if (m.contains("weights")) {
                if (command == "reduce")
                    cfg["weights"] = m.at("weights");
                else
                    cfg["measure"] = m.at("weights");
            }
        } else if (command == "reduce") {
            cfg["weights"] = m;
        } else {
            cfg["measure"] = m;
        }
    }
    if (!opt.moments.empty()) cfg["moments"] = json_arg(opt.moments);
    if (!opt.psi_kind.empty()) {
        nlohmann::json pj{{"kind", opt.psi_kind}};
        pj["sigma"] = opt.sigma;
        pj["scale"] = opt.scale;
        pj["shape"] = opt.shape;
        cfg["psi"] = pj;
    }
    if (!opt.group.empty()) cfg["group"] = opt.group;
    if (opt.alpha > 0.0) cfg["alpha"] = opt.alpha;
    if (opt.tol > 0.0) cfg["tol"] = opt.tol;
    if (opt.n_set) cfg["n"] = opt.n;
    if (!opt.output_path.empty()) cfg["output"] = opt.output_path;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"e-variables for constraint-generated hypotheses: construction and LP verification"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON config (inline, path, or @path)");
        sub->add_option("--output", opt.output_path, "also write the JSON report to this path");
        sub->add_option("--tol", opt.tol, "feasibility tolerance (default 1e-9)");
    };

    auto* verify = app.add_subcommand("verify", "worst-case expectation of a candidate over the hypothesis");
    add_common(verify);
    verify->add_option("--grid", opt.grid, "grid JSON");
    verify->add_option("--constraints", opt.constraints, "constraints JSON");
    verify->add_option("--candidate", opt.candidate, "candidate JSON (pi | values | mixture | symmetry_f)");

    auto* maximal = app.add_subcommand("maximal", "feasibility, maximality, and CQ verdicts for an affine candidate");
    add_common(maximal);
    maximal->add_option("--grid", opt.grid, "grid JSON");
    maximal->add_option("--constraints", opt.constraints, "constraints JSON");
    maximal->add_option("--candidate", opt.candidate, "candidate JSON carrying pi");

    auto* subpsi = app.add_subcommand("subpsi", "mixture e-variables, sub-psi checks, Chernoff table");
    add_common(subpsi);
    subpsi->add_option("--psi", opt.psi_kind, "gaussian | exponential | gamma | custom-table");
    subpsi->add_option("--sigma", opt.sigma, "gaussian sigma");
    subpsi->add_option("--scale", opt.scale, "exponential/gamma scale");
    subpsi->add_option("--shape", opt.shape, "gamma shape");
    subpsi->add_option("--mix", opt.mixture, "mixture JSON {nodes, weights}");
    subpsi->add_option("--grid", opt.grid, "x grid JSON");
    subpsi->add_option("--measure", opt.measure, "weights JSON to verify against the psi bound");

    auto* symmetry = app.add_subcommand("symmetry", "orbit averages and exact e-variables for a finite group");
    add_common(symmetry);
    symmetry->add_option("--group", opt.group, "trivial | s<n> | cyclic:<n> | signs:<d>");
    symmetry->add_option("--grid", opt.grid, "grid JSON (points may be vectors)");
    symmetry->add_option("--f", opt.f, "base function JSON for the exact form 1 + f - f_pi");
    symmetry->add_option("--values", opt.values, "candidate values JSON for the envelope check");

    auto* reduce = app.add_subcommand("reduce", "barycenter reduction onto at most m+1 atoms");
    add_common(reduce);
    reduce->add_option("--measure", opt.measure, "measure JSON ({grid, weights} or weights)");
    reduce->add_option("--grid", opt.grid, "grid JSON when --measure is bare weights");
    reduce->add_option("--moments", opt.moments, "moments JSON ({functions: [...]} or {powers: [...]})");

    auto* demo = app.add_subcommand("relaxed-demo", "truncated counting-space demo of relaxed integrability");
    add_common(demo);
    demo->add_option("--n", opt.n, "truncation level (default 40)")->capture_default_str();

    auto* etest = app.add_subcommand("etest", "evaluate an e-test on CSV observations");
    add_common(etest);
    etest->add_option("--grid", opt.grid, "grid JSON");
    etest->add_option("--constraints", opt.constraints, "constraints JSON");
    etest->add_option("--candidate", opt.candidate, "candidate JSON");
    etest->add_option("--alpha", opt.alpha, "test level in (0,1)");
    etest->add_option("--data", opt.data_path, "CSV with one column per grid dimension")->required();

    CLI11_PARSE(app, argc, argv);
    opt.n_set = demo->count("--n") > 0 || app.got_subcommand(demo);

    try {
        const std::string command = app.get_subcommands().front()->get_name();
        nlohmann::json cfg = assemble(command, opt);
        std::optional<std::string> csv;
        if (!opt.data_path.empty()) csv = read_file(opt.data_path);
        auto result = evar::cli::run(cfg, csv);
        const std::string text = evar::canonical_dump(result.report);
        std::fputs(text.c_str(), stdout);
        std::string outpath = opt.output_path;
        if (outpath.empty() && cfg.contains("output")) outpath = cfg.at("output").get<std::string>();
        if (!outpath.empty()) {
            std::ofstream f(outpath, std::ios::binary);
            if (!f) throw evar::InputError("cannot write report to " + outpath);
            f << text;
        }
        return result.exit_code;
    } catch (const evar::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return evar::cli::kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return evar::cli::kExitInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return evar::cli::kExitInput;
    }
}
