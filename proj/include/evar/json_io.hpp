#pragma once

#include <string>

#include <json.hpp>

#include "evar/common.hpp"
#include "evar/finite_hyp.hpp"
#include "evar/measure.hpp"

namespace evar {

using ordered_json = nlohmann::ordered_json;

// Canonical serialization: fixed key order (insertion order of ordered_json),
// two-space indentation, all floating-point numbers at 17 significant digits.
// Identical inputs yield byte-identical reports.
inline void canonical_dump_rec(const ordered_json& j, std::string& out, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string pad_in(static_cast<std::size_t>(depth + 1) * 2, ' ');
    switch (j.type()) {
        case ordered_json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                out += ordered_json(it.key()).dump();
                out += ": ";
                canonical_dump_rec(it.value(), out, depth + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case ordered_json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                canonical_dump_rec(v, out, depth + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case ordered_json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) throw NumericalError("report: non-finite number cannot be serialized");
            out += format_double(v);
            return;
        }
        default:
            out += j.dump();
            return;
    }
}

inline std::string canonical_dump(const ordered_json& j) {
    std::string out;
    canonical_dump_rec(j, out, 0);
    out += "\n";
    return out;
}

inline std::string json_hash(const ordered_json& j) { return hex64(fnv1a64(canonical_dump(j))); }

inline ordered_json grid_to_json(const SampleGrid& grid) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : grid.points()) {
        if (grid.dim() == 1)
            arr.push_back(p[0]);
        else
            arr.push_back(p);
    }
    return arr;
}

inline SampleGrid grid_from_json(const nlohmann::json& j) {
    if (j.is_array()) {
        if (j.empty()) throw InputError("grid: empty");
        if (j.front().is_array()) {
            std::vector<std::vector<double>> pts;
            for (const auto& p : j) pts.push_back(p.get<std::vector<double>>());
            return SampleGrid::from_vectors(std::move(pts));
        }
        return SampleGrid(j.get<std::vector<double>>());
    }
    if (j.is_object()) {
        if (j.contains("points")) return grid_from_json(j.at("points"));
        const double lo = j.at("min").get<double>();
        const double hi = j.at("max").get<double>();
        const double step = j.at("step").get<double>();
        if (!(step > 0.0) || !(hi > lo)) throw InputError("grid: need max > min and step > 0");
        std::vector<double> pts;
        const auto count = static_cast<long>(std::floor((hi - lo) / step + 0.5));
        for (long k = 0; k <= count; ++k) pts.push_back(lo + step * static_cast<double>(k));
        if (std::abs(pts.back() - hi) < step * 1e-9) pts.back() = hi;
        return SampleGrid(std::move(pts));
    }
    throw InputError("grid: expected an array of points or {min,max,step}");
}

inline ordered_json constraint_to_json(const ConstraintFunction& g) {
    if (g.form()) {
        ordered_json o;
        o["kind"] = g.form()->kind;
        o["params"] = ordered_json::object();
        for (const auto& [k, v] : g.form()->params) o["params"][k] = v;
        return o;
    }
    ordered_json o;
    o["values"] = g.values();
    return o;
}

// Accepts {"kind": <builtin>, "params": {...}} entries (expanded to the
// family's constraint functions) or {"values": [...]} raw rows; a single
// object is treated as a one-entry list.
inline std::vector<ConstraintFunction> constraints_from_json(const nlohmann::json& j, const SampleGrid& grid) {
    std::vector<ConstraintFunction> out;
    auto add_entry = [&](const nlohmann::json& e) {
        if (e.contains("values")) {
            out.push_back(ConstraintFunction(e.at("values").get<std::vector<double>>()));
            return;
        }
        if (!e.contains("kind")) throw InputError("constraint entry needs \"kind\" or \"values\"");
        const std::string kind = e.at("kind").get<std::string>();
        auto bk = builtin_kind_from_string(kind);
        if (!bk) throw InputError("unknown constraint kind: " + kind);
        std::map<std::string, double> params;
        if (e.contains("params"))
            for (auto it = e.at("params").begin(); it != e.at("params").end(); ++it)
                params[it.key()] = it.value().get<double>();
        auto hyp = builtin_constraints(*bk, params, grid);
        for (const auto& g : hyp.constraints()) out.push_back(g);
    };
    if (j.is_object())
        add_entry(j);
    else if (j.is_array())
        for (const auto& e : j) add_entry(e);
    else
        throw InputError("constraints: expected an object or an array");
    return out;
}

inline Hypothesis hypothesis_from_json(const nlohmann::json& grid_j, const nlohmann::json& constraints_j) {
    auto grid = grid_from_json(grid_j);
    auto cs = constraints_from_json(constraints_j, grid);
    return Hypothesis(std::move(grid), std::move(cs));
}

// {"grid": [...], "constraints": [...], "weights": [...]}
inline ordered_json measure_bundle_to_json(const SampleGrid& grid, const std::vector<ConstraintFunction>& cs,
                                           const DiscreteMeasure& mu) {
    ordered_json o;
    o["grid"] = grid_to_json(grid);
    o["constraints"] = ordered_json::array();
    for (const auto& g : cs) o["constraints"].push_back(constraint_to_json(g));
    o["weights"] = mu.weights();
    return o;
}

}  // namespace evar
