#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hvfif/analysis.hpp"
#include "hvfif/config.hpp"
#include "hvfif/io.hpp"
#include "hvfif/stability.hpp"

namespace hvfif {

struct RunResult {
    int exit_code = 0;                    // 0 ok, 2 = some hypothesis flag is false
    std::vector<std::string> artifacts;   // paths written
};

namespace detail {

inline Json echo_json(const nlohmann::json& j) {
    using nlohmann::json;
    switch (j.type()) {
        case json::value_t::null: return Json::null();
        case json::value_t::boolean: return Json::boolean(j.get<bool>());
        case json::value_t::number_integer:
        case json::value_t::number_unsigned:
            return Json::integer(j.get<long long>());
        case json::value_t::number_float: return Json::number(j.get<double>());
        case json::value_t::string: return Json::string(j.get<std::string>());
        case json::value_t::array: {
            Json a = Json::array();
            for (const auto& v : j) a.push(echo_json(v));
            return a;
        }
        case json::value_t::object: {
            Json o = Json::object();   // nlohmann iterates objects in sorted key order
            for (auto it = j.begin(); it != j.end(); ++it) o.set(it.key(), echo_json(it.value()));
            return o;
        }
        default: return Json::null();
    }
}

inline Json contraction_json(const ContractionReport& r, const ValidationFlags& f) {
    Json per = Json::array();
    for (const auto& pi : r.per_interval) {
        per.push(Json::object()
                     .set("col_sum_1", Json::number(pi.col_sum_1))
                     .set("col_sum_2", Json::number(pi.col_sum_2))
                     .set("L_S_i", Json::number(pi.L_S_i))
                     .set("L_q_i", Json::number(pi.L_q_i))
                     .set("L_qt_i", Json::number(pi.L_qt_i)));
    }
    return Json::object()
        .set("S", Json::number(r.S))
        .set("c_L", Json::number(r.c_L))
        .set("L_S", Json::number(r.L_S))
        .set("kappa", Json::number(r.kappa))
        .set("L_Q", Json::number(r.L_Q))
        .set("theta_max", Json::number(r.theta_max))
        .set("c_at_half_theta", Json::number(r.c_at_half_theta))
        .set("contractive", Json::boolean(r.contractive))
        .set("factor_sups_ok", Json::boolean(f.factor_sups_ok))
        .set("envelope_ok", Json::boolean(f.envelope_ok))
        .set("endpoint_residual", Json::number(f.endpoint_residual))
        .set("envelope", Json::object()
                             .set("y", Json::array()
                                           .push(Json::number(r.envelope_y.lo))
                                           .push(Json::number(r.envelope_y.hi)))
                             .set("z", Json::array()
                                           .push(Json::number(r.envelope_z.lo))
                                           .push(Json::number(r.envelope_z.hi))))
        .set("per_interval", std::move(per));
}

inline const char* case_name(DimensionCase c) {
    switch (c) {
        case DimensionCase::a: return "a";
        case DimensionCase::b: return "b";
        case DimensionCase::inconclusive: return "inconclusive";
    }
    return "?";
}

inline Json dimension_json(const DimensionReport& r) {
    Json triple = Json::null();
    if (r.hypothesis.triple_found)
        triple = Json::array()
                     .push(Json::integer(r.hypothesis.alpha1))
                     .push(Json::integer(r.hypothesis.alpha2))
                     .push(Json::integer(r.hypothesis.alpha3));
    return Json::object()
        .set("lambda_low", Json::number(r.lambda_low))
        .set("lambda_up", Json::number(r.lambda_up))
        .set("bound_low", Json::number(r.bound_low))
        .set("bound_up", Json::number(r.bound_up))
        .set("case", Json::string(case_name(r.dim_case)))
        .set("hypothesis", Json::object()
                               .set("uniform_nodes", Json::boolean(r.hypothesis.uniform_nodes))
                               .set("sign_condition", Json::boolean(r.hypothesis.sign_condition))
                               .set("triple_found", Json::boolean(r.hypothesis.triple_found))
                               .set("triple", std::move(triple))
                               .set("y_noncollinear", Json::boolean(r.hypothesis.y_noncollinear))
                               .set("z_noncollinear", Json::boolean(r.hypothesis.z_noncollinear))
                               .set("yz_comonotone", Json::boolean(r.hypothesis.yz_comonotone))
                               .set("H", Json::number(r.hypothesis.H))
                               .set("h", Json::number(r.hypothesis.h)));
}

inline Json dimension_surface_json(const BivariateDimensionReport& r,
                                   const BivariateFlags& flags) {
    Json triple = Json::null();
    if (r.hypothesis.triple_found)
        triple = Json::array()
                     .push(Json::integer(r.hypothesis.i1))
                     .push(Json::integer(r.hypothesis.i2))
                     .push(Json::integer(r.hypothesis.i3));
    return Json::object()
        .set("lambda_low", Json::number(r.lambda_low))
        .set("lambda_up", Json::number(r.lambda_up))
        .set("bound_low", Json::number(r.bound_low))
        .set("bound_up", Json::number(r.bound_up))
        .set("case", Json::string(case_name(r.dim_case)))
        .set("hypothesis",
             Json::object()
                 .set("square_grid", Json::boolean(r.hypothesis.square_grid))
                 .set("sign_condition", Json::boolean(r.hypothesis.sign_condition))
                 .set("contractive", Json::boolean(flags.contractive))
                 .set("factor_sups_ok", Json::boolean(flags.factor_sups_ok))
                 .set("triple_found", Json::boolean(r.hypothesis.triple_found))
                 .set("slice_axis", r.hypothesis.triple_found
                                        ? Json::string(r.hypothesis.along_x_slice ? "x" : "y")
                                        : Json::null())
                 .set("slice", Json::integer(r.hypothesis.slice))
                 .set("triple", std::move(triple))
                 .set("H", Json::number(r.hypothesis.H))
                 .set("h", Json::number(r.hypothesis.h)));
}

inline const char* case_name(SmoothnessCase c) {
    switch (c) {
        case SmoothnessCase::delta_lt_1: return "delta_lt_1";
        case SmoothnessCase::delta_eq_1: return "delta_eq_1";
        case SmoothnessCase::delta_gt_1: return "delta_gt_1";
    }
    return "?";
}

inline Json smoothness_json(const SmoothnessConstants& sc) {
    Json per = Json::array();
    for (std::size_t i = 0; i < sc.M_k.size(); ++i)
        per.push(Json::object()
                     .set("M_k", Json::number(sc.M_k[i]))
                     .set("M_tilde_k", Json::number(sc.Mt_k[i])));
    return Json::object()
        .set("M", Json::number(sc.M))
        .set("delta", Json::number(sc.delta))
        .set("case", Json::string(case_name(sc.smoothness_case)))
        .set("D", Json::number(sc.D))
        .set("L1", Json::number(sc.L1))
        .set("tau1", Json::number(sc.tau1))
        .set("L2", Json::number(sc.L2))
        .set("tau2", Json::number(sc.tau2))
        .set("alpha", Json::number(sc.alpha))
        .set("sup_f1", Json::number(sc.sup_f1))
        .set("sup_f2", Json::number(sc.sup_f2))
        .set("omega", Json::number(sc.omega))
        .set("omega_tilde", Json::number(sc.omega_tilde))
        .set("L_q", Json::number(sc.L_q))
        .set("L_qt", Json::number(sc.L_qt))
        .set("hypothesis_threshold", Json::number(sc.hypothesis_threshold))
        .set("hypothesis_ok", Json::boolean(sc.hypothesis_ok))
        .set("per_interval", std::move(per));
}

inline Json stability_json(const StabilityReport& r) {
    return Json::object()
        .set("which", Json::string(to_string(r.which)))
        .set("max_dx", Json::number(r.max_dx))
        .set("max_dy", Json::number(r.max_dy))
        .set("max_dz", Json::number(r.max_dz))
        .set("omega", Json::number(r.omega))
        .set("omega_tilde", Json::number(r.omega_tilde))
        .set("bound", Json::number(r.bound))
        .set("measured_sup_diff", Json::number(r.measured_sup_diff))
        .set("satisfied", Json::boolean(r.satisfied))
        .set("hypothesis_ok", Json::boolean(r.hypothesis_ok));
}

inline Json empirical_json(const EmpiricalDimension* dim, const HolderEstimate* holder) {
    Json out = Json::object();
    if (dim != nullptr) {
        Json recs = Json::array();
        for (const auto& r : dim->records)
            recs.push(Json::object()
                          .set("epsilon", Json::number(r.epsilon))
                          .set("count", Json::integer(r.count)));
        Json used = Json::array();
        for (int k : dim->scales_used) used.push(Json::integer(k));
        out.set("dimension_slope", Json::number(dim->slope))
            .set("dimension_stderr", Json::number(dim->stderr_))
            .set("scales_used", std::move(used))
            .set("box_counts", std::move(recs));
    } else {
        out.set("dimension_slope", Json::null());
    }
    if (holder != nullptr) {
        out.set("holder_tau", Json::number(holder->tau))
            .set("holder_stderr", Json::number(holder->stderr_))
            .set("holder_degenerate", Json::boolean(holder->degenerate));
    } else {
        out.set("holder_tau", Json::null());
    }
    return out;
}

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

struct ReportSections {
    Json contraction = Json::null();
    Json dimension = Json::null();
    Json smoothness = Json::null();
    Json stability = Json::null();
    Json empirical = Json::null();
};

inline void write_report(const std::string& path, const RunConfig& cfg, ReportSections s,
                         std::vector<std::string>& artifacts) {
    Json doc = Json::object();
    doc.set("config_echo", echo_json(cfg.echo))
        .set("contraction", std::move(s.contraction))
        .set("dimension", std::move(s.dimension))
        .set("smoothness", std::move(s.smoothness))
        .set("stability", std::move(s.stability))
        .set("empirical", std::move(s.empirical));
    write_file(path, doc.dump());
    artifacts.push_back(path);
}

} // namespace detail

// ---------------------------------------------------------------------------
// commands

inline RunResult run_generate(const RunConfig& cfg, const std::string& out_dir) {
    if (cfg.mode != RunMode::curve) throw Error("generate expects a curve config");
    RunResult res;
    auto h = build_univariate(cfg.curve_data, cfg.curve_factors, cfg.build);

    SampleSet ss;
    if (cfg.evaluator.method == EvalMethod::subdivision) {
        ss = subdivide(h, cfg.evaluator.depth);
    } else {
        ss = rb_iterate(h, cfg.evaluator.grid_size, cfg.evaluator.max_iters, cfg.evaluator.tol);
    }
    verify_envelope(h, ss);

    const std::string csv = detail::join_path(
        out_dir, cfg.output.samples_csv.empty() ? "samples.csv" : cfg.output.samples_csv);
    write_samples_csv(csv, ss);
    res.artifacts.push_back(csv);
    if (!cfg.output.pgm.empty()) {
        const std::string pgm = detail::join_path(out_dir, cfg.output.pgm);
        write_curve_pgm(pgm, ss, cfg.output.curve_pgm_width, cfg.output.curve_pgm_height);
        res.artifacts.push_back(pgm);
    }

    detail::ReportSections sections;
    sections.contraction = detail::contraction_json(h.contraction, h.flags);
    detail::write_report(detail::join_path(out_dir, cfg.output.report_json), cfg,
                         std::move(sections), res.artifacts);

    const bool ok = h.flags.contractive && h.flags.factor_sups_ok && h.flags.envelope_ok;
    res.exit_code = ok ? 0 : 2;
    return res;
}

inline RunResult run_analyze(const RunConfig& cfg, const std::string& out_dir) {
    if (cfg.mode != RunMode::curve) throw Error("analyze expects a curve config");
    RunResult res;
    auto h = build_univariate(cfg.curve_data, cfg.curve_factors, cfg.build);

    int kmax = 1;
    for (int k : cfg.analysis.scales) kmax = std::max(kmax, k);
    const int depth = std::max(cfg.evaluator.depth, kmax + 2);
    const auto samples = subdivide(h, depth);
    verify_envelope(h, samples);

    const auto dim_report = dimension_bounds(h);
    const auto empirical = estimate_dimension_from_samples(samples, h.domain(),
                                                           h.interval_count(), cfg.analysis.scales);
    const auto holder =
        empirical_holder(samples, cfg.analysis.holder_j_min, cfg.analysis.holder_j_max);

    bool smooth_ok = true;
    Json smooth_section = Json::null();
    try {
        const auto sc = smoothness_constants(h, samples);
        smooth_section = detail::smoothness_json(sc);
    } catch (const Error& e) {
        smooth_ok = false;
        smooth_section = Json::object()
                             .set("hypothesis_ok", Json::boolean(false))
                             .set("error", Json::string(e.what()));
    }

    if (!cfg.output.boxcount_csv.empty()) {
        const std::string bc = detail::join_path(out_dir, cfg.output.boxcount_csv);
        write_boxcounts_csv(bc, empirical.records);
        res.artifacts.push_back(bc);
    }

    detail::ReportSections sections;
    sections.contraction = detail::contraction_json(h.contraction, h.flags);
    Json dim_json = detail::dimension_json(dim_report);
    sections.dimension = std::move(dim_json);
    sections.smoothness = std::move(smooth_section);
    sections.empirical = detail::empirical_json(&empirical, &holder);
    detail::write_report(detail::join_path(out_dir, cfg.output.report_json), cfg,
                         std::move(sections), res.artifacts);

    const bool ok = h.flags.contractive && h.flags.factor_sups_ok && h.flags.envelope_ok &&
                    dim_report.hypothesis.all() && smooth_ok;
    res.exit_code = ok ? 0 : 2;
    return res;
}

inline RunResult run_stability(const RunConfig& cfg, const std::string& out_dir,
                               std::optional<std::uint64_t> seed_override) {
    if (cfg.mode != RunMode::curve) throw Error("stability expects a curve config");
    RunResult res;
    auto h = build_univariate(cfg.curve_data, cfg.curve_factors, cfg.build);
    const auto samples = subdivide(h, 8);
    verify_envelope(h, samples);

    Json reports = Json::array();
    bool hypothesis_ok = true;
    bool all_satisfied = true;
    try {
        const auto sc = smoothness_constants(h, samples);
        Rng rng(seed_override.value_or(cfg.analysis.seed));
        ExperimentParams ep;
        ep.subdivision_depth = cfg.analysis.stability.subdivision_depth;
        ep.grid_size = cfg.analysis.stability.grid_size;
        ep.max_iters = cfg.analysis.stability.max_iters;
        ep.tol = cfg.analysis.stability.tol;
        for (Perturb which : cfg.analysis.stability.which) {
            for (int t = 0; t < cfg.analysis.stability.trials; ++t) {
                const auto starred =
                    perturb_data(h.data, which, cfg.analysis.stability.magnitude, rng);
                const auto rep = stability_experiment(h, sc, starred, which, ep);
                hypothesis_ok = hypothesis_ok && rep.hypothesis_ok;
                all_satisfied = all_satisfied && rep.satisfied;
                reports.push(detail::stability_json(rep));
            }
        }
    } catch (const Error& e) {
        hypothesis_ok = false;
        reports = Json::object()
                      .set("hypothesis_ok", Json::boolean(false))
                      .set("error", Json::string(e.what()));
    }

    detail::ReportSections sections;
    sections.contraction = detail::contraction_json(h.contraction, h.flags);
    sections.stability = std::move(reports);
    detail::write_report(detail::join_path(out_dir, cfg.output.report_json), cfg,
                         std::move(sections), res.artifacts);

    const bool ok = h.flags.contractive && h.flags.factor_sups_ok && hypothesis_ok;
    (void)all_satisfied;   // recorded per trial; not an exit condition
    res.exit_code = ok ? 0 : 2;
    return res;
}

inline RunResult run_surface(const RunConfig& cfg, const std::string& out_dir) {
    if (cfg.mode != RunMode::surface) throw Error("surface expects a surface config");
    RunResult res;
    const auto h = build_bivariate(cfg.grid_data, cfg.cell_factors, cfg.build);
    const auto ss = subdivide_surface(h, cfg.evaluator.depth);

    const std::string csv = detail::join_path(
        out_dir, cfg.output.samples_csv.empty() ? "surface.csv" : cfg.output.samples_csv);
    write_surface_csv(csv, ss);
    res.artifacts.push_back(csv);
    const std::string pgm =
        detail::join_path(out_dir, cfg.output.pgm.empty() ? "surface.pgm" : cfg.output.pgm);
    write_surface_pgm(pgm, ss, cfg.output.pgm_bits);
    res.artifacts.push_back(pgm);

    auto rep = dimension_bounds_surface(h);
    const auto empirical = estimate_dimension_surface(ss, h.data.domain_x(), h.data.domain_y(),
                                                      h.data.nx(), cfg.analysis.scales);
    if (!cfg.output.boxcount_csv.empty()) {
        const std::string bc = detail::join_path(out_dir, cfg.output.boxcount_csv);
        write_boxcounts_csv(bc, empirical.records);
        res.artifacts.push_back(bc);
    }

    detail::ReportSections sections;
    sections.dimension = detail::dimension_surface_json(rep, h.flags);
    sections.empirical = detail::empirical_json(&empirical, nullptr);
    detail::write_report(detail::join_path(out_dir, cfg.output.report_json), cfg,
                         std::move(sections), res.artifacts);

    const bool ok = h.flags.contractive && h.flags.factor_sups_ok && h.flags.sign_condition &&
                    rep.hypothesis.all();
    res.exit_code = ok ? 0 : 2;
    return res;
}

inline RunResult run_command(const std::string& command, const RunConfig& cfg,
                             const std::string& out_dir,
                             std::optional<std::uint64_t> seed_override) {
    std::filesystem::create_directories(out_dir);
    if (command == "generate") return run_generate(cfg, out_dir);
    if (command == "analyze") return run_analyze(cfg, out_dir);
    if (command == "stability") return run_stability(cfg, out_dir, seed_override);
    if (command == "surface") return run_surface(cfg, out_dir);
    throw Error("unknown command: " + command);
}

} // namespace hvfif
