#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "potlab/io.hpp"
#include "potlab/parallel.hpp"

namespace potlab {

inline constexpr const char* kPotlabVersion = "0.1.0";

inline std::vector<std::string> known_checks() {
    return {"main",        "uniform",        "individual1", "individual2",
            "proof-chain", "poincare-lelong", "duality"};
}

struct RunOptions {
    std::string out_dir;  // empty: nothing written
    bool emit_fields = false;
    double tolerance = -1.0;  // >= 0 overrides every scenario tolerance
    int jobs = 1;
};

struct ScenarioOutcome {
    std::string name;
    std::string check;
    std::string verdict;  // pass | fail | error
    InequalityReport report;
    std::string error;
    double runtime_ms = 0.0;
    std::vector<std::pair<std::string, json>> emitted;
};

struct SuiteResult {
    std::vector<ScenarioOutcome> outcomes;
    std::string csv;
    bool any_fail = false;
    json metadata;
};

namespace scenario_detail {

inline const json& require(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end())
        throw PreconditionError(where + ": missing field '" + key + "'");
    return *it;
}

inline double number(const json& j, const char* key, const std::string& where,
                     std::optional<double> fallback = {}) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (fallback) return *fallback;
        throw PreconditionError(where + ": missing numeric field '" + key + "'");
    }
    if (!it->is_number()) throw PreconditionError(where + ": field '" + key + "' must be a number");
    return it->get<double>();
}

inline GridPtr parse_grid(const json& j, const std::string& where) {
    std::string kind = require(j, "kind", where).get<std::string>();
    double h = number(j, "h", where);
    if (kind == "disk") {
        Point c = point_from_json(require(j, "center", where), "center");
        return make_disk_grid(c, number(j, "radius", where), h);
    }
    if (kind == "annulus") {
        Point c = point_from_json(require(j, "center", where), "center");
        return make_annulus_grid(c, number(j, "inner", where), number(j, "radius", where), h);
    }
    if (kind == "rectangle") {
        const json& b = require(j, "box", where);
        if (!b.is_array() || b.size() != 4)
            throw PreconditionError(where + ": rectangle box must be [x0, x1, y0, y1]");
        return make_rectangle_grid({b[0], b[1], b[2], b[3]}, h);
    }
    throw PreconditionError(where + ": unknown domain kind '" + kind + "'");
}

inline ModelDomain parse_model(const json& j, const std::string& where) {
    std::string kind = require(j, "kind", where).get<std::string>();
    if (kind == "disk")
        return ModelDomain::disk(point_from_json(require(j, "center", where)),
                                 number(j, "radius", where));
    if (kind == "annulus")
        return ModelDomain::annulus(point_from_json(require(j, "center", where)),
                                    number(j, "inner", where), number(j, "radius", where));
    if (kind == "rectangle") {
        const json& b = require(j, "box", where);
        return ModelDomain::rectangle({b[0], b[1], b[2], b[3]});
    }
    if (kind == "interval")
        return ModelDomain::interval(number(j, "a", where), number(j, "b", where));
    throw PreconditionError(where + ": unknown model kind '" + kind + "'");
}

inline ClosedBallUnion parse_balls(const json& j, const std::string& where) {
    ClosedBallUnion S;
    const json& balls = require(j, "balls", where);
    for (const auto& b : balls)
        S.balls.push_back(
            {point_from_json(require(b, "center", where)), number(b, "radius", where)});
    return S;
}

/// Field spec: "constant" or "log_combo"
/// (sum of c_k log|z - a_k| + quad |z|^2 + linear . z + offset).
inline ScalarField parse_field(GridPtr grid, const json& j, const std::string& where) {
    std::string type = require(j, "type", where).get<std::string>();
    if (type == "constant") {
        return ScalarField(grid, number(j, "value", where));
    }
    if (type == "log_combo") {
        struct Term {
            Point a;
            double c;
        };
        std::vector<Term> terms;
        std::vector<Marker> markers;
        if (j.contains("terms"))
            for (const auto& t : j["terms"]) {
                Term term{point_from_json(require(t, "point", where)),
                          number(t, "coefficient", where, 1.0)};
                terms.push_back(term);
                if (term.c > 0) markers.push_back({term.a, -1, -1});
            }
        double quad = number(j, "quad", where, 0.0);
        double offset = number(j, "offset", where, 0.0);
        Point lin{0.0, 0.0};
        if (j.contains("linear")) lin = point_from_json(j["linear"], "linear");
        return ScalarField::sample(
            grid,
            [terms, quad, offset, lin](Point z) {
                double t = quad * std::norm(z) + offset + lin.real() * z.real() +
                           lin.imag() * z.imag();
                for (const auto& term : terms)
                    t += term.c * std::log(std::abs(z - term.a));
                return t;
            },
            std::move(markers));
    }
    throw PreconditionError(where + ": unknown field type '" + type + "'");
}

inline MajorantSpec parse_majorant(GridPtr grid, const json& j, const std::string& where) {
    std::string family = require(j, "family", where).get<std::string>();
    if (family == "zero") return MajorantSpec::zero(grid);
    if (family == "subharmonic") {
        auto u1 = parse_field(grid, require(j, "u1", where), where);
        auto u2 = j.contains("u2") ? parse_field(grid, j["u2"], where) : ScalarField(grid, 0.0);
        return make_delta_sbh(u1, u2);
    }
    throw PreconditionError(where + ": unknown majorant family '" + family + "'");
}

inline HoloFunction parse_holo(const json& j, const std::string& where) {
    std::string type = require(j, "type", where).get<std::string>();
    std::vector<DivisorEntry> roots;
    if (j.contains("roots")) {
        const json& rs = j["roots"];
        const json* ms = j.contains("multiplicities") ? &j["multiplicities"] : nullptr;
        if (ms && ms->size() != rs.size())
            throw PreconditionError(where + ": roots/multiplicities size mismatch");
        for (size_t k = 0; k < rs.size(); ++k)
            roots.push_back({point_from_json(rs[k], "root"),
                             ms ? (*ms)[k].get<int>() : 1});
    }
    if (type == "polynomial") {
        Point leading{1.0, 0.0};
        if (j.contains("leading")) leading = point_from_json(j["leading"], "leading");
        return HoloFunction::polynomial(std::move(roots), leading);
    }
    if (type == "blaschke") return HoloFunction::blaschke(std::move(roots));
    if (type == "exp_poly") {
        std::vector<Point> coeffs;
        for (const auto& c : require(j, "coefficients", where))
            coeffs.push_back(point_from_json(c, "coefficient"));
        return HoloFunction::exp_poly(std::move(coeffs), std::move(roots));
    }
    throw PreconditionError(where + ": unknown function type '" + type + "'");
}

inline TestFunction parse_test_function(GridPtr grid, const json& j, const ClosedBallUnion& S,
                                        const std::string& where) {
    std::string type = require(j, "type", where).get<std::string>();
    if (type == "zero") {
        TestFunction tf;
        tf.field = ScalarField(grid, 0.0);
        tf.bound = 0.0;
        return tf;
    }
    if (type == "green") {
        ModelDomain model = j.contains("model")
                                ? parse_model(j["model"], where)
                                : ModelDomain::disk(
                                      {(grid->box().x0 + grid->box().x1) / 2,
                                       (grid->box().y0 + grid->box().y1) / 2},
                                      (grid->box().x1 - grid->box().x0) / 2);
        Point pole = point_from_json(require(j, "pole", where), "pole");
        double scale = number(j, "scale", where, 1.0);
        return green_test_function(grid, model, pole, scale, S);
    }
    if (type == "gm_of_w") {
        auto w = parse_field(grid, require(j, "w", where), where);
        auto res = greatest_minorant(w, S);
        double b = std::max(1e-12, res.gm.max_over([&](int idx) {
            return grid->interior(idx) && !S.contains(grid->pos(idx));
        }));
        return make_test_function(res.gm, S, b);
    }
    throw PreconditionError(where + ": unknown test function type '" + type + "'");
}

inline std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace scenario_detail

/// Executes one scenario object; throws on schema or precondition
/// problems, returns the report otherwise.
inline InequalityReport run_scenario(const json& sc, const RunOptions& opt,
                                     std::vector<std::pair<std::string, json>>* emitted) {
    namespace sd = scenario_detail;
    const std::string name = sd::require(sc, "name", "scenario").get<std::string>();
    const std::string where = "scenario '" + name + "'";
    const std::string check = sd::require(sc, "check", where).get<std::string>();
    GridPtr grid = sd::parse_grid(sd::require(sc, "domain", where), where);

    CheckerOptions copt;
    copt.tolerance = opt.tolerance >= 0 ? opt.tolerance
                                        : sd::number(sc, "tolerance", where, copt.tolerance);

    auto emit = [&](const std::string& tag, const json& payload) {
        if (opt.emit_fields && emitted) emitted->emplace_back(tag, payload);
    };

    InequalityReport rep;
    rep.name = name;
    rep.check = check;

    if (check == "main") {
        auto S = sd::parse_balls(sd::require(sc, "S", where), where);
        Point x0 = point_from_json(sd::require(sc, "x0", where), "x0");
        double b = sd::number(sc, "b", where);
        auto u = sd::parse_field(grid, sd::require(sc, "u", where), where);
        auto M = sd::parse_majorant(grid, sd::require(sc, "majorant", where), where);
        auto v = sd::parse_test_function(grid, sd::require(sc, "test_function", where), S, where);
        if (sc.contains("b_is_bound") && sc["b_is_bound"].get<bool>()) v.bound = b;
        ModelDomain dtilde = sc.contains("dtilde") ? sd::parse_model(sc["dtilde"], where)
                                                   : default_dtilde(grid, S);
        rep = verify_main(grid, u, M, v, S, x0, dtilde, b, copt);
        emit("u", to_json(u));
        emit("v", to_json(v.field));
    } else if (check == "uniform") {
        auto S = sd::parse_balls(sd::require(sc, "S", where), where);
        Point z0 = point_from_json(sd::require(sc, "x0", where), "x0");
        double b = sd::number(sc, "b", where);
        auto f = sd::parse_holo(sd::require(sc, "function", where), where);
        auto M = sd::parse_majorant(grid, sd::require(sc, "majorant", where), where);
        auto v = sd::parse_test_function(grid, sd::require(sc, "test_function", where), S, where);
        if (sc.contains("b_is_bound") && sc["b_is_bound"].get<bool>()) v.bound = b;
        std::optional<ModelDomain> dtilde;
        if (sc.contains("dtilde")) dtilde = sd::parse_model(sc["dtilde"], where);
        rep = verify_uniform(grid, f, M, v, S, z0, b, dtilde, copt);
        emit("log_f", to_json(f.log_modulus_field(grid)));
        emit("v", to_json(v.field));
    } else if (check == "individual1") {
        Point z0 = point_from_json(sd::require(sc, "x0", where), "x0");
        double b = sd::number(sc, "b", where);
        auto f = sd::parse_holo(sd::require(sc, "function", where), where);
        auto M = sd::parse_majorant(grid, sd::require(sc, "majorant", where), where);
        auto w = sd::parse_field(grid, sd::require(sc, "w", where), where);
        std::vector<ClosedBallUnion> exhaustion;
        for (const auto& e : sd::require(sc, "exhaustion", where))
            exhaustion.push_back(sd::parse_balls(e, where));
        if (exhaustion.empty()) throw PreconditionError(where + ": empty exhaustion");
        auto v = sd::parse_test_function(grid, sd::require(sc, "test_function", where),
                                         exhaustion.front(), where);
        auto ex = verify_individual_1(grid, f, M, w, v, exhaustion, b, copt);
        rep = ex.inner;
        rep.check = "individual1";
        rep.lhs = ex.partial_sums.empty() ? 0.0 : ex.partial_sums.back();
        rep.rhs = ex.budget;
        rep.margin = rep.rhs - rep.lhs;
        rep.pass = ex.pass();
        for (size_t k = 0; k < ex.partial_sums.size(); ++k)
            rep.components["partial_sum_" + std::to_string(k)] = ex.partial_sums[k];
        (void)z0;
    } else if (check == "individual2") {
        auto S = sd::parse_balls(sd::require(sc, "S", where), where);
        Point z0 = point_from_json(sd::require(sc, "x0", where), "x0");
        auto f = sd::parse_holo(sd::require(sc, "function", where), where);
        auto M = sd::parse_majorant(grid, sd::require(sc, "majorant", where), where);
        auto w = sd::parse_field(grid, sd::require(sc, "w", where), where);
        std::string key = sc.contains("key_path") ? sc["key_path"].get<std::string>() : "ii";
        auto route = verify_individual_2(grid, f, M, w, S, z0, key, copt);
        rep = route.uniform;
        rep.name = name;
        rep.check = "individual2";
        rep.pass = route.pass();
        if (!route.classified && rep.note.empty())
            rep.note = "gm*w failed classification: " + route.classification.failing_clause();
        emit("gm_w", to_json(route.minorant.gm));
    } else if (check == "proof-chain") {
        auto S = sd::parse_balls(sd::require(sc, "S", where), where);
        Point x0 = point_from_json(sd::require(sc, "x0", where), "x0");
        double b = sd::number(sc, "b", where);
        auto u = sd::parse_field(grid, sd::require(sc, "u", where), where);
        auto M = sd::parse_majorant(grid, sd::require(sc, "majorant", where), where);
        auto v = sd::parse_test_function(grid, sd::require(sc, "test_function", where), S, where);
        if (sc.contains("b_is_bound") && sc["b_is_bound"].get<bool>()) v.bound = b;
        ModelDomain dtilde = sc.contains("dtilde") ? sd::parse_model(sc["dtilde"], where)
                                                   : default_dtilde(grid, S);
        auto ext = extend_test(v, S, x0, dtilde, b);
        std::vector<int> n_list = {4, 16, 64};
        if (sc.contains("n_list")) {
            n_list.clear();
            for (const auto& n : sc["n_list"]) n_list.push_back(n.get<int>());
        }
        ProofChainOptions popt;
        popt.checker = copt;
        auto chain = proof_chain_check(grid, u, M, ext.v_tilde, x0, n_list, popt);
        rep.c_tilde = ext.c_tilde;
        rep.pass = chain.pass();
        double worst = 0.0;
        for (const auto& s : chain.steps) {
            worst = std::max({worst, s.pj_u, s.pj_u1, s.pj_u2});
            rep.components["margin_n" + std::to_string(s.n)] = s.margin;
            rep.components["pj_u_n" + std::to_string(s.n)] = s.pj_u;
        }
        rep.lhs = worst;
        rep.rhs = popt.residual_tol;
        rep.margin = rep.rhs - rep.lhs;
        rep.components["limit_margin"] = chain.limit_margin;
        emit("v_tilde", to_json(ext.v_tilde));
    } else if (check == "poincare-lelong") {
        auto f = sd::parse_holo(sd::require(sc, "function", where), where);
        double rel_tol = sd::number(sc, "relative_tolerance", where, 0.02);
        double offroot_tol = sd::number(sc, "offroot_tolerance", where, 0.01);
        auto pl = poincare_lelong(f, grid);
        double worst_rel = 0.0;
        const auto& entries = f.divisor().entries;
        for (size_t k = 0; k < entries.size(); ++k)
            worst_rel = std::max(worst_rel,
                                 std::abs(pl.recovered[k].second - entries[k].multiplicity) /
                                     entries[k].multiplicity);
        rep.lhs = entries.empty() ? pl.offroot_mass : worst_rel;
        rep.rhs = entries.empty() ? offroot_tol : rel_tol;
        rep.margin = rep.rhs - rep.lhs;
        rep.pass = worst_rel <= rel_tol && pl.offroot_mass <= offroot_tol;
        rep.components["offroot_mass"] = pl.offroot_mass;
        rep.components["max_relative_error"] = worst_rel;
        emit("log_f", to_json(f.log_modulus_field(grid)));
    } else if (check == "duality") {
        Point x0 = point_from_json(sd::require(sc, "x0", where), "x0");
        ModelDomain dtilde = sd::parse_model(sd::require(sc, "dtilde", where), where);
        int nodes = static_cast<int>(sd::number(sc, "boundary_nodes", where, 4096));
        double tv_tol = sd::number(sc, "tv_tolerance", where, 0.02);
        auto ghat = extend_green(green_function(grid, dtilde, x0), dtilde);
        auto dual = duality_inverse(ghat, x0);
        auto omega = harmonic_measure(grid, dtilde, x0, nodes);
        double tv = angular_tv_distance(dual.mu.measure, omega, dtilde.center, dtilde.radius);
        rep.lhs = tv;
        rep.rhs = tv_tol;
        rep.margin = rep.rhs - rep.lhs;
        rep.pass = tv <= tv_tol;
        rep.components["tv_distance"] = tv;
        rep.components["dirac_coefficient"] = dual.dirac_coefficient;
        rep.components["ratio"] = dual.ratio;
        emit("extended_green", to_json(ghat));
        emit("recovered_measure", to_json(dual.mu));
    } else {
        throw PreconditionError(where + ": unknown check '" + check + "'");
    }

    rep.name = name;
    rep.diagnostics["h"] = grid->h();
    return rep;
}

inline SuiteResult run_suite(const json& config, const RunOptions& opt = {}) {
    if (!config.contains("schema_version"))
        throw PreconditionError("config: missing field 'schema_version'");
    if (config["schema_version"].get<int>() != 1)
        throw PreconditionError("config: unsupported schema_version");
    const json& scenarios = config.contains("scenarios") ? config["scenarios"] : json::array();
    if (!scenarios.is_array()) throw PreconditionError("config: 'scenarios' must be an array");

    SuiteResult result;
    result.outcomes.resize(scenarios.size());

    auto run_one = [&](long i) {
        const json& sc = scenarios[i];
        ScenarioOutcome& out = result.outcomes[i];
        out.name = sc.contains("name") ? sc["name"].get<std::string>()
                                       : "scenario-" + std::to_string(i);
        out.check = sc.contains("check") ? sc["check"].get<std::string>() : "";
        auto t0 = std::chrono::steady_clock::now();
        try {
            out.report = run_scenario(sc, opt, &out.emitted);
            out.verdict = out.report.pass ? "pass" : "fail";
        } catch (const std::exception& e) {
            // A scenario-level error is recorded; the suite continues.
            out.verdict = "error";
            out.error = e.what();
            out.report.name = out.name;
            out.report.check = out.check;
        }
        out.runtime_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    };
    parallel_for(0, static_cast<long>(scenarios.size()), run_one, std::max(1, opt.jobs));

    namespace sd = scenario_detail;
    std::string csv = "name,check,verdict,lhs,rhs,margin,C,cbar,h\n";
    for (const auto& out : result.outcomes) {
        const auto& r = out.report;
        csv += out.name + "," + out.check + "," + out.verdict + "," + sd::fmt(r.lhs) + "," +
               sd::fmt(r.rhs) + "," + sd::fmt(r.margin) + "," + sd::fmt(r.C) + "," +
               sd::fmt(r.cbar) + "," +
               sd::fmt(r.diagnostics.count("h") ? r.diagnostics.at("h") : 0.0) + "\n";
        result.any_fail |= out.verdict != "pass";
    }
    result.csv = std::move(csv);

    json meta;
    meta["version"] = kPotlabVersion;
    meta["scenario_count"] = scenarios.size();
    json runtimes;
    for (const auto& out : result.outcomes) runtimes[out.name] = out.runtime_ms;
    meta["runtime_ms"] = std::move(runtimes);
    result.metadata = std::move(meta);

    if (!opt.out_dir.empty()) {
        std::filesystem::create_directories(opt.out_dir);
        write_text(opt.out_dir + "/summary.csv", result.csv);
        for (const auto& out : result.outcomes) {
            json j = to_json(out.report);
            j["verdict"] = out.verdict;
            if (!out.error.empty()) j["error"] = out.error;
            write_text(opt.out_dir + "/report_" + out.name + ".json", j.dump(2) + "\n");
            for (const auto& [tag, payload] : out.emitted)
                write_text(opt.out_dir + "/" + out.name + "__" + tag + ".json",
                           payload.dump() + "\n");
        }
        write_text(opt.out_dir + "/metadata.json", result.metadata.dump(2) + "\n");
    }
    return result;
}

inline SuiteResult run_suite_file(const std::string& path, const RunOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open config: " + path);
    json config;
    try {
        in >> config;
    } catch (const json::parse_error& e) {
        throw PreconditionError("config parse error at byte " + std::to_string(e.byte) + ": " +
                                e.what());
    }
    return run_suite(config, opt);
}

}  // namespace potlab
