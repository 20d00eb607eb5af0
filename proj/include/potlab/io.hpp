#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "potlab/charge.hpp"
#include "potlab/checker.hpp"
#include "potlab/field.hpp"
#include "potlab/jensen.hpp"
#include "potlab/model_domain.hpp"

namespace potlab {

using json = nlohmann::json;

inline json to_json(Point p) { return json::array({p.real(), p.imag()}); }

inline Point point_from_json(const json& j, const char* what = "point") {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw PreconditionError(std::string(what) + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const GridDomain& g) {
    json j;
    switch (g.shape()) {
        case GridDomain::Shape::Disk:
            j["kind"] = "disk";
            j["center"] = to_json({(g.box().x0 + g.box().x1) / 2, (g.box().y0 + g.box().y1) / 2});
            j["radius"] = (g.box().x1 - g.box().x0) / 2;
            break;
        case GridDomain::Shape::Annulus:
            j["kind"] = "annulus";
            j["center"] = to_json({(g.box().x0 + g.box().x1) / 2, (g.box().y0 + g.box().y1) / 2});
            j["radius"] = (g.box().x1 - g.box().x0) / 2;
            j["inner"] = g.inner_radius();
            break;
        case GridDomain::Shape::Rectangle:
        case GridDomain::Shape::Custom:
            j["kind"] = "rectangle";
            break;
    }
    j["box"] = {g.box().x0, g.box().x1, g.box().y0, g.box().y1};
    j["h"] = g.h();
    j["nx"] = g.nx();
    j["ny"] = g.ny();
    return j;
}

/// Documented dump form: domain descriptor + row-major values + markers.
inline json to_json(const ScalarField& f) {
    json j;
    j["domain"] = to_json(f.dom());
    json values = json::array();
    json defined = json::array();
    for (long idx = 0; idx < f.dom().size(); ++idx) {
        values.push_back(f[idx]);
        defined.push_back(f.defined(idx) ? 1 : 0);
    }
    j["values"] = std::move(values);
    j["defined"] = std::move(defined);
    json markers = json::array();
    for (const auto& m : f.markers())
        markers.push_back({{"point", to_json(m.where)}, {"sign", m.sign}});
    j["markers"] = std::move(markers);
    return j;
}

inline json to_json(const RieszCharge& c) {
    json j;
    j["domain"] = to_json(*c.grid());
    json atoms = json::array();
    for (const auto& a : c.atoms())
        atoms.push_back({{"point", to_json(a.where)}, {"mass", a.mass}});
    j["atoms"] = std::move(atoms);
    json cells = json::array();
    const GridDomain& g = *c.grid();
    for (long idx = 0; idx < g.size(); ++idx)
        if (c.cell(idx) != 0.0)
            cells.push_back({g.ix(static_cast<int>(idx)), g.iy(static_cast<int>(idx)),
                             c.cell(idx)});
    j["cells"] = std::move(cells);
    return j;
}

inline json to_json(const JensenMeasure& mu) {
    json j = to_json(mu.measure);
    j["x0"] = to_json(mu.x0);
    j["normalization_defect"] = mu.normalization_defect;
    return j;
}

inline json to_json(const InequalityReport& r) {
    json j;
    j["name"] = r.name;
    j["check"] = r.check;
    j["verdict"] = r.pass ? "pass" : "fail";
    j["lhs"] = r.lhs;
    j["rhs"] = std::isinf(r.rhs) ? json("inf") : json(r.rhs);
    j["margin"] = std::isinf(r.margin) ? json("inf") : json(r.margin);
    j["C"] = r.C;
    j["c_tilde"] = r.c_tilde;
    j["cbar"] = std::isinf(r.cbar) ? json("inf") : json(r.cbar);
    j["components"] = r.components;
    j["diagnostics"] = r.diagnostics;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot open for writing: " + path);
    out << text;
}

}  // namespace potlab
