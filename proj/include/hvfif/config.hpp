#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hvfif/bivariate.hpp"
#include "hvfif/error.hpp"
#include "hvfif/eval.hpp"
#include "hvfif/hvfif.hpp"
#include "hvfif/stability.hpp"

namespace hvfif {

enum class RunMode { curve, surface };

struct EvaluatorConfig {
    EvalMethod method = EvalMethod::subdivision;
    int depth = 8;            // subdivision (surfaces default to 4)
    int grid_size = 4097;     // rb iteration
    double tol = 1e-10;
    int max_iters = 5000;
};

struct StabilityConfig {
    std::vector<Perturb> which = {Perturb::y, Perturb::z, Perturb::all};
    int trials = 20;
    double magnitude = 0.1;
    int subdivision_depth = 6;
    int grid_size = 4097;
    int max_iters = 2000;
    double tol = 1e-9;
};

struct AnalysisConfig {
    std::vector<int> scales = {1, 2, 3, 4, 5, 6};
    int holder_j_min = 2;
    int holder_j_max = 0;     // 0 = pick from the sample count
    std::uint64_t seed = 1;
    StabilityConfig stability;
};

struct OutputConfig {
    std::string samples_csv;
    std::string report_json = "report.json";
    std::string boxcount_csv;
    std::string pgm;
    int pgm_bits = 8;
    int curve_pgm_width = 1024;
    int curve_pgm_height = 512;
};

struct RunConfig {
    RunMode mode = RunMode::curve;
    ExtendedDataSet curve_data;
    std::vector<FactorQuad> curve_factors;
    GridDataSet grid_data;
    std::vector<FactorQuad> cell_factors;
    BuildOptions build;
    EvaluatorConfig evaluator;
    AnalysisConfig analysis;
    OutputConfig output;
    nlohmann::json echo;
};

namespace detail {

using nlohmann::json;

inline const json& need(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw Error("missing field \"" + path + "\"");
    return j.at(key);
}

inline double need_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw Error("type mismatch at \"" + path + "\": expected a number");
    return j.get<double>();
}

inline long long need_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw Error("type mismatch at \"" + path + "\": expected an integer");
    return j.get<long long>();
}

inline std::string need_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw Error("type mismatch at \"" + path + "\": expected a string");
    return j.get<std::string>();
}

inline std::vector<double> need_number_array(const json& j, const std::string& path) {
    if (!j.is_array()) throw Error("type mismatch at \"" + path + "\": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(need_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<std::vector<double>> need_matrix(const json& j, const std::string& path) {
    if (!j.is_array()) throw Error("type mismatch at \"" + path + "\": expected an array of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(need_number_array(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline FactorExpr parse_factor(const std::string& text, const std::string& path, bool allow_y) {
    FactorExpr e;
    try {
        e = FactorExpr::parse(text);
    } catch (const ParseError& pe) {
        throw Error(path + ": " + pe.what());
    }
    if (!allow_y && e.uses_y())
        throw Error(path + ": uses variable y in curve mode");
    return e;
}

// one factor family: an array of exactly `count` expression strings, or a
// single string broadcast across all entries (surfaces only)
inline std::vector<FactorExpr> factor_family(const json& j, const std::string& path, int count,
                                             bool allow_y, bool allow_broadcast) {
    std::vector<FactorExpr> out;
    if (allow_broadcast && j.is_string()) {
        const FactorExpr e = parse_factor(j.get<std::string>(), path, allow_y);
        out.assign(static_cast<std::size_t>(count), e);
        return out;
    }
    if (!j.is_array())
        throw Error("type mismatch at \"" + path + "\": expected an array of expression strings");
    if (static_cast<int>(j.size()) != count)
        throw Error("expected " + std::to_string(count) + " factor quadruples, found " +
                    std::to_string(j.size()) + " (at \"" + path + "\")");
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(parse_factor(need_string(j[i], path + "[" + std::to_string(i) + "]"),
                                   path + "[" + std::to_string(i) + "]", allow_y));
    return out;
}

inline std::vector<FactorQuad> factor_block(const json& j, int count, bool allow_y,
                                            bool allow_broadcast) {
    const auto s = factor_family(need(j, "s", "factors.s"), "factors.s", count, allow_y,
                                 allow_broadcast);
    const auto st = factor_family(need(j, "s_tilde", "factors.s_tilde"), "factors.s_tilde", count,
                                  allow_y, allow_broadcast);
    const auto sp = factor_family(need(j, "s_prime", "factors.s_prime"), "factors.s_prime", count,
                                  allow_y, allow_broadcast);
    const auto stp = factor_family(need(j, "s_tilde_prime", "factors.s_tilde_prime"),
                                   "factors.s_tilde_prime", count, allow_y, allow_broadcast);
    std::vector<FactorQuad> out;
    for (int i = 0; i < count; ++i) {
        out.push_back({s[static_cast<std::size_t>(i)], sp[static_cast<std::size_t>(i)],
                       st[static_cast<std::size_t>(i)], stp[static_cast<std::size_t>(i)]});
    }
    return out;
}

} // namespace detail

inline RunConfig load_config(const std::string& path) {
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("config parse error in " + path + ": " + e.what());
    }

    RunConfig cfg;
    cfg.echo = j;

    const std::string mode = detail::need_string(detail::need(j, "mode", "mode"), "mode");
    if (mode == "curve") cfg.mode = RunMode::curve;
    else if (mode == "surface") cfg.mode = RunMode::surface;
    else throw Error("type mismatch at \"mode\": expected \"curve\" or \"surface\"");

    const json& data = detail::need(j, "data", "data");
    const json& factors = detail::need(j, "factors", "factors");

    if (cfg.mode == RunMode::curve) {
        cfg.curve_data.x = detail::need_number_array(detail::need(data, "x", "data.x"), "data.x");
        cfg.curve_data.y = detail::need_number_array(detail::need(data, "y", "data.y"), "data.y");
        cfg.curve_data.z = detail::need_number_array(detail::need(data, "z", "data.z"), "data.z");
        cfg.curve_data.validate();
        const int n = cfg.curve_data.interval_count();
        cfg.curve_factors = detail::factor_block(factors, n, /*allow_y=*/false,
                                                 /*allow_broadcast=*/false);
    } else {
        cfg.grid_data.x = detail::need_number_array(detail::need(data, "x", "data.x"), "data.x");
        cfg.grid_data.y = detail::need_number_array(detail::need(data, "y", "data.y"), "data.y");
        cfg.grid_data.z = detail::need_matrix(detail::need(data, "z", "data.z"), "data.z");
        cfg.grid_data.t = detail::need_matrix(detail::need(data, "t", "data.t"), "data.t");
        cfg.grid_data.validate();
        const int cells = cfg.grid_data.nx() * cfg.grid_data.ny();
        cfg.cell_factors = detail::factor_block(factors, cells, /*allow_y=*/true,
                                                /*allow_broadcast=*/true);
        cfg.evaluator.depth = 4;
        cfg.analysis.scales = {1, 2, 3, 4};
    }

    if (j.contains("options")) {
        const json& o = j.at("options");
        if (o.contains("allow_noncontractive"))
            cfg.build.strict = !o.at("allow_noncontractive").get<bool>();
        if (o.contains("orientation")) {
            for (std::size_t i = 0; i < o.at("orientation").size(); ++i) {
                const std::string v =
                    detail::need_string(o.at("orientation")[i],
                                        "options.orientation[" + std::to_string(i) + "]");
                if (v == "forward") cfg.build.orientation.push_back(Orientation::forward);
                else if (v == "reversed") cfg.build.orientation.push_back(Orientation::reversed);
                else throw Error("type mismatch at \"options.orientation\": expected \"forward\" or \"reversed\"");
            }
        }
    }

    if (j.contains("evaluator")) {
        const json& e = j.at("evaluator");
        if (e.contains("method")) {
            const std::string m = detail::need_string(e.at("method"), "evaluator.method");
            if (m == "subdivision") cfg.evaluator.method = EvalMethod::subdivision;
            else if (m == "rb_iteration") cfg.evaluator.method = EvalMethod::rb_iteration;
            else throw Error("type mismatch at \"evaluator.method\": expected \"subdivision\" or \"rb_iteration\"");
        }
        if (e.contains("depth"))
            cfg.evaluator.depth = static_cast<int>(detail::need_integer(e.at("depth"), "evaluator.depth"));
        if (e.contains("grid_size"))
            cfg.evaluator.grid_size =
                static_cast<int>(detail::need_integer(e.at("grid_size"), "evaluator.grid_size"));
        if (e.contains("tol")) cfg.evaluator.tol = detail::need_number(e.at("tol"), "evaluator.tol");
        if (e.contains("max_iters"))
            cfg.evaluator.max_iters =
                static_cast<int>(detail::need_integer(e.at("max_iters"), "evaluator.max_iters"));
    }

    if (j.contains("analysis")) {
        const json& a = j.at("analysis");
        if (a.contains("scales")) {
            cfg.analysis.scales.clear();
            for (std::size_t i = 0; i < a.at("scales").size(); ++i)
                cfg.analysis.scales.push_back(static_cast<int>(detail::need_integer(
                    a.at("scales")[i], "analysis.scales[" + std::to_string(i) + "]")));
        }
        if (a.contains("seed"))
            cfg.analysis.seed = static_cast<std::uint64_t>(
                detail::need_integer(a.at("seed"), "analysis.seed"));
        if (a.contains("holder")) {
            const json& hj = a.at("holder");
            if (hj.contains("j_min"))
                cfg.analysis.holder_j_min =
                    static_cast<int>(detail::need_integer(hj.at("j_min"), "analysis.holder.j_min"));
            if (hj.contains("j_max"))
                cfg.analysis.holder_j_max =
                    static_cast<int>(detail::need_integer(hj.at("j_max"), "analysis.holder.j_max"));
        }
        if (a.contains("stability")) {
            const json& sj = a.at("stability");
            if (sj.contains("which")) {
                cfg.analysis.stability.which.clear();
                for (std::size_t i = 0; i < sj.at("which").size(); ++i) {
                    const std::string w = detail::need_string(
                        sj.at("which")[i], "analysis.stability.which[" + std::to_string(i) + "]");
                    if (w == "x") cfg.analysis.stability.which.push_back(Perturb::x);
                    else if (w == "y") cfg.analysis.stability.which.push_back(Perturb::y);
                    else if (w == "z") cfg.analysis.stability.which.push_back(Perturb::z);
                    else if (w == "all") cfg.analysis.stability.which.push_back(Perturb::all);
                    else throw Error("type mismatch at \"analysis.stability.which\": expected x, y, z or all");
                }
            }
            if (sj.contains("trials"))
                cfg.analysis.stability.trials = static_cast<int>(
                    detail::need_integer(sj.at("trials"), "analysis.stability.trials"));
            if (sj.contains("magnitude"))
                cfg.analysis.stability.magnitude =
                    detail::need_number(sj.at("magnitude"), "analysis.stability.magnitude");
            if (sj.contains("subdivision_depth"))
                cfg.analysis.stability.subdivision_depth = static_cast<int>(detail::need_integer(
                    sj.at("subdivision_depth"), "analysis.stability.subdivision_depth"));
            if (sj.contains("grid_size"))
                cfg.analysis.stability.grid_size = static_cast<int>(
                    detail::need_integer(sj.at("grid_size"), "analysis.stability.grid_size"));
        }
    }

    if (j.contains("output")) {
        const json& o = j.at("output");
        if (o.contains("samples_csv"))
            cfg.output.samples_csv = detail::need_string(o.at("samples_csv"), "output.samples_csv");
        if (o.contains("report_json"))
            cfg.output.report_json = detail::need_string(o.at("report_json"), "output.report_json");
        if (o.contains("boxcount_csv"))
            cfg.output.boxcount_csv =
                detail::need_string(o.at("boxcount_csv"), "output.boxcount_csv");
        if (o.contains("pgm")) cfg.output.pgm = detail::need_string(o.at("pgm"), "output.pgm");
        if (o.contains("pgm_bits"))
            cfg.output.pgm_bits =
                static_cast<int>(detail::need_integer(o.at("pgm_bits"), "output.pgm_bits"));
    }

    for (int k : cfg.analysis.scales)
        if (k < 1) throw Error("type mismatch at \"analysis.scales\": exponents must be >= 1");
    return cfg;
}

} // namespace hvfif
