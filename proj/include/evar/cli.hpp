#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evar/adversary.hpp"
#include "evar/finite_hyp.hpp"
#include "evar/json_io.hpp"
#include "evar/measure.hpp"
#include "evar/reduction.hpp"
#include "evar/sub_psi.hpp"
#include "evar/symmetry.hpp"

namespace evar::cli {

// Exit codes: 0 ok, 1 input error, 2 verification failure, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitViolated = 2;
inline constexpr int kExitNumerical = 3;

struct RunResult {
    ordered_json report;
    int exit_code = kExitOk;
};

namespace detail {

inline double get_tol(const nlohmann::json& config) {
    const double tol = config.value("tol", kDefaultTol);
    if (!(tol > 0.0) || !std::isfinite(tol)) throw InputError("config: tol must be a positive number");
    return tol;
}

inline const nlohmann::json& require(const nlohmann::json& config, const char* key) {
    if (!config.contains(key)) throw InputError(std::string("config: missing \"") + key + "\"");
    return config.at(key);
}

inline PsiFunction psi_from_json(const nlohmann::json& j) {
    const std::string kind = require(j, "kind").get<std::string>();
    auto param = [&](const char* name, std::optional<double> fallback = {}) {
        if (j.contains(name)) return j.at(name).get<double>();
        if (j.contains("params") && j.at("params").contains(name)) return j.at("params").at(name).get<double>();
        if (fallback) return *fallback;
        throw InputError(std::string("psi: missing parameter ") + name);
    };
    if (kind == "gaussian") return PsiFunction::gaussian(param("sigma", 1.0));
    if (kind == "exponential") return PsiFunction::exponential(param("scale", 1.0));
    if (kind == "gamma") return PsiFunction::gamma(param("shape"), param("scale", 1.0));
    if (kind == "custom-table" || kind == "custom_table") {
        const auto& src = j.contains("params") && j.at("params").contains("lambdas") ? j.at("params") : j;
        return PsiFunction::custom_table(require(src, "lambdas").get<std::vector<double>>(),
                                         require(src, "values").get<std::vector<double>>());
    }
    throw InputError("psi: unknown kind " + kind);
}

inline FiniteGroupAction group_from_name(const std::string& name, const SampleGrid& grid) {
    auto want_dim = [&](std::size_t d, const char* what) {
        if (grid.dim() != d)
            throw InputError(std::string("group ") + what + ": grid dimension " + std::to_string(grid.dim()) +
                             " does not match");
    };
    if (name == "trivial") return FiniteGroupAction::trivial(grid.size());
    if (name.size() >= 2 && name[0] == 's' && name.find(':') == std::string::npos) {
        const std::size_t k = static_cast<std::size_t>(std::stoul(name.substr(1)));
        want_dim(k, name.c_str());
        return FiniteGroupAction::symmetric_coordinates(grid);
    }
    if (name.rfind("cyclic:", 0) == 0) {
        const std::size_t k = static_cast<std::size_t>(std::stoul(name.substr(7)));
        want_dim(k, "cyclic");
        return FiniteGroupAction::cyclic_coordinates(grid);
    }
    if (name.rfind("signs:", 0) == 0) {
        const std::size_t k = static_cast<std::size_t>(std::stoul(name.substr(6)));
        want_dim(k, "signs");
        return FiniteGroupAction::sign_flips(grid);
    }
    throw InputError("group: expected trivial | s<n> | cyclic:<n> | signs:<d>, got " + name);
}

struct Candidate {
    EVariable h;
    bool closed_form = false;  // evaluable off the grid
};

inline Candidate candidate_from_json(const nlohmann::json& config, const Hypothesis& hyp, double tol) {
    const auto& spec = require(config, "candidate");
    Candidate out;
    if (spec.contains("pi")) {
        PiVector pi(spec.at("pi").get<std::vector<double>>());
        out.h = candidate_evar(pi, hyp, tol);
        out.closed_form = true;
        for (const auto& g : hyp.constraints())
            if (!g.form()) out.closed_form = false;
        return out;
    }
    if (spec.contains("values")) {
        out.h = EVariable::from_values(spec.at("values").get<std::vector<double>>());
        if (out.h.values.size() != hyp.grid_size())
            throw InputError("candidate: values length does not match the grid");
        return out;
    }
    if (spec.contains("mixture")) {
        if (!config.contains("psi")) throw InputError("candidate: mixture requires a psi block");
        auto psi = psi_from_json(config.at("psi"));
        LambdaMixture mix(spec.at("mixture").at("nodes").get<std::vector<double>>(),
                          spec.at("mixture").at("weights").get<std::vector<double>>());
        out.h = mixture_evar(psi, mix, hyp.grid());
        out.closed_form = true;
        return out;
    }
    if (spec.contains("symmetry_f")) {
        if (!config.contains("group")) throw InputError("candidate: symmetry_f requires a group");
        auto group = group_from_name(config.at("group").get<std::string>(), hyp.grid());
        out.h = exact_evar(spec.at("symmetry_f").get<std::vector<double>>(), group);
        return out;
    }
    throw InputError("candidate: expected pi | values | mixture | symmetry_f");
}

// Header optional, numeric columns, LF or CRLF; errors carry line numbers.
inline std::vector<std::vector<double>> parse_csv(const std::string& text, std::size_t expect_cols) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        if (trimmed.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        std::istringstream ls(line);
        while (std::getline(ls, cur, ',')) {
            cur.erase(0, cur.find_first_not_of(" \t\r"));
            const auto end = cur.find_last_not_of(" \t\r");
            fields.push_back(end == std::string::npos ? std::string() : cur.substr(0, end + 1));
        }
        std::vector<double> row;
        bool numeric = true;
        for (const auto& f : fields) {
            try {
                std::size_t used = 0;
                const double v = std::stod(f, &used);
                if (used != f.size()) throw std::invalid_argument(f);
                row.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first_content) {  // header line
                first_content = false;
                continue;
            }
            throw InputError("csv line " + std::to_string(lineno) + ": non-numeric field");
        }
        first_content = false;
        if (row.size() != expect_cols)
            throw InputError("csv line " + std::to_string(lineno) + ": expected " +
                             std::to_string(expect_cols) + " column(s), found " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError("csv: no data rows");
    return rows;
}

inline double min_grid_spacing(const SampleGrid& grid) {
    double best = std::numeric_limits<double>::infinity();
    if (grid.dim() == 1) {
        for (std::size_t i = 1; i < grid.size(); ++i)
            best = std::min(best, grid.scalar(i) - grid.scalar(i - 1));
        return best;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = i + 1; j < grid.size(); ++j) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < grid.dim(); ++k) {
                const double d = grid.point(i)[k] - grid.point(j)[k];
                d2 += d * d;
            }
            best = std::min(best, std::sqrt(d2));
        }
    }
    return best;
}

inline std::pair<std::size_t, double> nearest_grid_point(const SampleGrid& grid,
                                                         const std::vector<double>& x) {
    std::size_t best = 0;
    double bestd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < grid.dim(); ++k) {
            const double d = grid.point(i)[k] - x[k];
            d2 += d * d;
        }
        if (d2 < bestd) {
            bestd = d2;
            best = i;
        }
    }
    return {best, std::sqrt(bestd)};
}

inline ordered_json envelope(const nlohmann::json& config, const std::string& command) {
    ordered_json rep;
    rep["schema"] = "evarkit/1";
    rep["command"] = command;
    nlohmann::json hashed = config;
    hashed.erase("output");  // delivery path, not semantics
    rep["config_hash"] = json_hash(ordered_json(hashed));
    return rep;
}

}  // namespace detail

inline RunResult run_verify(const nlohmann::json& config) {
    const double tol = detail::get_tol(config);
    auto hyp = hypothesis_from_json(detail::require(config, "grid"), detail::require(config, "constraints"));
    auto cand = detail::candidate_from_json(config, hyp, tol);
    auto rep = worst_case_expectation(cand.h, hyp, tol);

    RunResult out;
    out.report = detail::envelope(config, "verify");
    out.report["grid_hash"] = hex64(rep.grid_hash);
    out.report["tol"] = tol;
    out.report["candidate_form"] = to_string(cand.h.form);
    out.report["candidate_values"] = cand.h.values;
    out.report["clipped"] = cand.h.clipped;
    out.report["verdict"] = to_string(rep.verdict);
    if (rep.verdict == Verdict::hypothesis_empty) {
        out.report["worst_value"] = nullptr;
    } else {
        out.report["worst_value"] = rep.worst_value;
        out.report["witness"] = rep.witness->weights();
        out.report["constraint_slack"] = rep.constraint_slack;
    }
    out.report["is_evariable"] = rep.verdict != Verdict::violated;
    out.exit_code = rep.verdict == Verdict::violated ? kExitViolated : kExitOk;
    return out;
}

inline RunResult run_maximal(const nlohmann::json& config) {
    const double tol = detail::get_tol(config);
    auto hyp = hypothesis_from_json(detail::require(config, "grid"), detail::require(config, "constraints"));
    const auto& cand_spec = detail::require(config, "candidate");
    if (!cand_spec.contains("pi")) throw InputError("maximal: candidate must carry a pi vector");
    PiVector pi(cand_spec.at("pi").get<std::vector<double>>());
    auto h = candidate_evar(pi, hyp, tol);

    RunResult out;
    out.report = detail::envelope(config, "maximal");
    out.report["grid_hash"] = hex64(hyp.grid().hash());
    out.report["tol"] = tol;
    out.report["pi"] = pi.weights;
    out.report["candidate_values"] = h.values;
    out.report["clipped"] = h.clipped;
    out.report["in_pi_phi"] = in_pi_phi(pi, hyp, tol);
    if (auto analytic = in_pi_phi_analytic(pi, hyp)) {
        out.report["in_pi_phi_analytic"] = *analytic;
        // the ellipse criterion, when this is the mean-variance family
        const auto& cs = hyp.constraints();
        if (cs.size() == 3 && cs[2].form() && cs[2].form()->kind == "square_minus") {
            const double sigma = cs[2].form()->params.at("sigma");
            MeanVarParams p(sigma, pi.weights[0] - pi.weights[1], pi.weights[2] * sigma * sigma);
            out.report["ellipse_value"] = mean_var_ellipse_value(p);
            out.report["ellipse_maximal"] = mean_var_maximal(p);
        }
    }
    auto wc = worst_case_expectation(h, hyp, tol);
    out.report["adversary_verdict"] = to_string(wc.verdict);
    if (wc.verdict != Verdict::hypothesis_empty) out.report["worst_value"] = wc.worst_value;
    if (wc.verdict == Verdict::violated) {
        out.report["maximality"] = "not-an-e-variable";
        out.exit_code = kExitViolated;
        return out;
    }
    auto mx = maximality_check(h, hyp, tol);
    out.report["maximality"] = to_string(mx.verdict);
    out.report["cq_holds"] = mx.cq_holds;
    if (mx.verdict == MaximalityVerdict::dominated) {
        out.report["dominating_values"] = mx.dominating->values;
        out.report["witness_index"] = *mx.witness_index;
        out.report["gap"] = mx.gap;
    }
    if (!mx.cq_holds && mx.verdict == MaximalityVerdict::undetermined)
        out.report["note"] = "CQ fails: maximality undetermined";
    return out;
}

inline RunResult run_subpsi(const nlohmann::json& config) {
    const double tol = detail::get_tol(config);
    auto psi = detail::psi_from_json(detail::require(config, "psi"));
    auto grid = grid_from_json(detail::require(config, "grid"));
    if (grid.dim() != 1) throw InputError("subpsi: scalar grid required");
    const auto& mix_j = detail::require(config, "mixture");
    LambdaMixture mix(mix_j.at("nodes").get<std::vector<double>>(),
                      mix_j.at("weights").get<std::vector<double>>());
    auto h = mixture_evar(psi, mix, grid);

    RunResult out;
    out.report = detail::envelope(config, "subpsi");
    out.report["grid_hash"] = hex64(grid.hash());
    out.report["tol"] = tol;
    ordered_json psi_j;
    psi_j["kind"] = to_string(psi.kind());
    if (psi.kind() == PsiKind::gaussian) psi_j["sigma"] = psi.sigma();
    if (psi.kind() == PsiKind::exponential) psi_j["scale"] = psi.scale();
    if (psi.kind() == PsiKind::gamma) {
        psi_j["shape"] = psi.shape();
        psi_j["scale"] = psi.scale();
    }
    out.report["psi"] = psi_j;
    double x_max = grid.scalar(grid.size() - 1);
    out.report["lambda_cap"] = lambda_cap(psi, x_max);
    out.report["mixture"] = ordered_json{{"nodes", mix.nodes}, {"weights", mix.weights}};
    out.report["overflow"] = h.overflow;
    ordered_json samples = ordered_json::array();
    ordered_json chernoff = ordered_json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        samples.push_back(ordered_json{{"x", grid.scalar(i)}, {"h", h.values[i]}});
        chernoff.push_back(ordered_json{{"x", grid.scalar(i)}, {"bound", chernoff_bound(psi, grid.scalar(i))}});
    }
    out.report["h_samples"] = samples;
    out.report["chernoff"] = chernoff;
    if (config.contains("measure")) {
        DiscreteMeasure mu(config.at("measure").get<std::vector<double>>());
        auto chk = verify_subpsi(mu, grid, psi, make_lambda_grid(psi, x_max), tol);
        ordered_json cj;
        cj["sub_psi"] = chk.ok;
        cj["worst_lambda"] = chk.worst_lambda;
        cj["max_log_violation"] = chk.max_log_violation;
        cj["expectation_h"] = expectation(mu, h);
        out.report["measure_check"] = cj;
        if (!chk.ok) out.exit_code = kExitViolated;
    }
    return out;
}

inline RunResult run_symmetry(const nlohmann::json& config) {
    const double tol = detail::get_tol(config);
    auto grid = grid_from_json(detail::require(config, "grid"));
    auto group = detail::group_from_name(detail::require(config, "group").get<std::string>(), grid);

    RunResult out;
    out.report = detail::envelope(config, "symmetry");
    out.report["grid_hash"] = hex64(grid.hash());
    out.report["tol"] = tol;
    out.report["group"] = ordered_json{{"name", config.at("group").get<std::string>()},
                                       {"order", group.order()}};
    const auto& cand = detail::require(config, "candidate");
    if (cand.contains("symmetry_f")) {
        auto f = cand.at("symmetry_f").get<std::vector<double>>();
        auto h = exact_evar(f, group);
        out.report["exact_evar"] = h.values;
        out.report["f_pi"] = orbit_average(f, group);
        // exactness probe on deterministic symmetrized measures
        double residual = 0.0;
        std::vector<DiscreteMeasure> probes{DiscreteMeasure::uniform(grid.size()),
                                            DiscreteMeasure::dirac(grid.size(), 0),
                                            DiscreteMeasure::dirac(grid.size(), grid.size() - 1)};
        for (const auto& mu : probes) {
            auto mu_pi = symmetrize_measure(mu, group);
            residual = std::max(residual, std::abs(expectation(mu_pi, h) - 1.0));
        }
        out.report["exactness_residual"] = residual;
        return out;
    }
    if (cand.contains("values")) {
        auto h = EVariable::from_values(cand.at("values").get<std::vector<double>>());
        if (h.values.size() != grid.size()) throw InputError("symmetry: values length does not match grid");
        auto env = evar_upper_envelope(h, group, tol);
        out.report["verdict"] = env.is_evariable ? "e-variable" : "violated";
        out.report["max_f_pi"] = env.max_f_pi;
        out.report["f_pi"] = env.f_pi;
        out.report["envelope"] = env.envelope.values;
        if (!env.is_evariable) out.exit_code = kExitViolated;
        return out;
    }
    throw InputError("symmetry: candidate must carry symmetry_f or values");
}

inline RunResult run_reduce(const nlohmann::json& config) {
    auto grid = grid_from_json(detail::require(config, "grid"));
    DiscreteMeasure mu(detail::require(config, "weights").get<std::vector<double>>());
    if (mu.size() != grid.size()) throw InputError("reduce: weights length does not match grid");

    const auto& mj = detail::require(config, "moments");
    std::vector<std::vector<double>> fs;
    if (mj.contains("functions")) {
        for (const auto& f : mj.at("functions")) fs.push_back(f.get<std::vector<double>>());
    }
    if (mj.contains("powers")) {
        if (grid.dim() != 1) throw InputError("reduce: powers need a scalar grid");
        for (const auto& pj : mj.at("powers")) {
            const double p = pj.get<double>();
            std::vector<double> f(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) f[i] = std::pow(grid.scalar(i), p);
            fs.push_back(std::move(f));
        }
    }
    if (fs.empty()) throw InputError("reduce: moments need \"functions\" or \"powers\"");
    auto spec = MomentSpec::from_measure(mu, std::move(fs));
    auto nu = barycenter_reduce(mu, spec);

    RunResult out;
    out.report = detail::envelope(config, "reduce");
    out.report["grid_hash"] = hex64(grid.hash());
    out.report["m"] = spec.size();
    out.report["targets"] = spec.targets;
    std::size_t before = 0, after = 0;
    for (double v : mu.weights())
        if (v > 0.0) ++before;
    ordered_json support = ordered_json::array();
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (nu.weights()[i] > 0.0) {
            ++after;
            support.push_back(i);
        }
    }
    out.report["support_before"] = before;
    out.report["support_after"] = after;
    out.report["support_indices"] = support;
    out.report["weights"] = nu.weights();
    double moment_res = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i)
        moment_res = std::max(moment_res, std::abs(expectation(nu, spec.functions[i]) - spec.targets[i]));
    out.report["residuals"] =
        ordered_json{{"moment_max", moment_res}, {"mass", std::abs(nu.mass() - 1.0)}};
    return out;
}

inline RunResult run_relaxed_demo(const nlohmann::json& config) {
    const int n = config.value("n", 40);
    auto rep = relaxed_demo(n);
    RunResult out;
    out.report = detail::envelope(config, "relaxed-demo");
    out.report["n"] = rep.n;
    out.report["mass"] = rep.mass;
    out.report["normalized"] = rep.normalized;
    out.report["membership_base"] = rep.membership_base;
    out.report["relaxed_with_negative"] = rep.relaxed_with_negative;
    out.report["partial_sum_final"] = rep.partial_sums.back();
    out.report["abs_integral_partial"] = rep.abs_integral_partial;
    out.report["partial_sums"] = rep.partial_sums;
    return out;
}

inline RunResult run_etest(const nlohmann::json& config, const std::optional<std::string>& csv_text) {
    const double tol = detail::get_tol(config);
    if (!csv_text) throw InputError("etest: observation data (CSV) required");
    auto hyp = hypothesis_from_json(detail::require(config, "grid"), detail::require(config, "constraints"));
    auto cand = detail::candidate_from_json(config, hyp, tol);
    const double alpha = detail::require(config, "alpha").get<double>();
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("etest: alpha must be in (0,1)");

    const auto rows = detail::parse_csv(*csv_text, hyp.grid().dim());
    const double spacing = detail::min_grid_spacing(hyp.grid());

    RunResult out;
    out.report = detail::envelope(config, "etest");
    out.report["grid_hash"] = hex64(hyp.grid().hash());
    out.report["alpha"] = alpha;
    out.report["threshold"] = 1.0 / alpha;
    out.report["evaluation"] = cand.closed_form ? "closed-form" : "nearest-grid";
    ordered_json warnings = ordered_json::array();
    ordered_json observations = ordered_json::array();
    double combined = 1.0;
    const auto& spec = config.at("candidate");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        double ev = 0.0;
        ordered_json oj;
        oj["x"] = hyp.grid().dim() == 1 ? ordered_json(rows[r][0]) : ordered_json(rows[r]);
        if (cand.closed_form && cand.h.form == EvarForm::affine_in_constraints) {
            double raw = 1.0;
            for (std::size_t k = 0; k < cand.h.pi.size(); ++k)
                raw += cand.h.pi[k] * evaluate_form(*hyp.constraints()[k].form(), rows[r][0]);
            ev = std::max(0.0, raw);
        } else if (cand.closed_form && cand.h.form == EvarForm::subpsi_mixture) {
            auto psi = detail::psi_from_json(detail::require(config, "psi"));
            LambdaMixture mix(spec.at("mixture").at("nodes").get<std::vector<double>>(),
                              spec.at("mixture").at("weights").get<std::vector<double>>());
            double v = 0.0;
            for (std::size_t j = 0; j < mix.nodes.size(); ++j)
                v += mix.weights[j] * (1.0 + g_lambda(psi, mix.nodes[j], rows[r][0]));
            ev = std::min(v, kValueCap);
        } else {
            auto [idx, dist] = detail::nearest_grid_point(hyp.grid(), rows[r]);
            ev = cand.h.values[idx];
            oj["nearest_index"] = idx;
            oj["distance"] = dist;
            if (dist > 0.5 * spacing)
                warnings.push_back("observation " + std::to_string(r + 1) + ": distance " +
                                   format_double(dist) + " to nearest grid point exceeds half grid spacing " +
                                   format_double(0.5 * spacing));
        }
        oj["e_value"] = ev;
        observations.push_back(oj);
        combined = std::min(combined * ev, kValueCap);
    }
    out.report["observations"] = observations;
    out.report["combined_e_value"] = combined;
    out.report["combination"] = "product (extension)";
    const bool reject = combined >= 1.0 / alpha;
    out.report["reject"] = reject;
    out.report["decision"] = reject ? "reject" : "retain";
    if (!warnings.empty()) out.report["warnings"] = warnings;
    return out;
}

// Dispatch on config["command"]; CSV text feeds the etest command.
inline RunResult run(const nlohmann::json& config, const std::optional<std::string>& csv_text = {}) {
    if (!config.is_object()) throw InputError("config: expected a JSON object");
    if (config.contains("schema") && config.at("schema").get<std::string>() != "evarkit/1")
        throw InputError("config: unsupported schema (expected \"evarkit/1\")");
    const std::string command = detail::require(config, "command").get<std::string>();
    if (command == "verify") return run_verify(config);
    if (command == "maximal") return run_maximal(config);
    if (command == "subpsi") return run_subpsi(config);
    if (command == "symmetry") return run_symmetry(config);
    if (command == "reduce") return run_reduce(config);
    if (command == "relaxed-demo") return run_relaxed_demo(config);
    if (command == "etest") return run_etest(config, csv_text);
    throw InputError("config: unknown command " + command);
}

}  // namespace evar::cli
