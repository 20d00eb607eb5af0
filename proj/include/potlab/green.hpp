#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "potlab/charge.hpp"
#include "potlab/dirichlet.hpp"
#include "potlab/field.hpp"
#include "potlab/model_domain.hpp"

namespace potlab {

/// Closed-form Green function of a disk:
/// g(z, p) = log|R^2 - conj(p - c)(z - c)| - log(R |z - p|), positive
/// inside, 0 on |z - c| = R.
inline double green_disk(Point z, Point pole, Point center, double R) {
    const Point zz = z - center, pp = pole - center;
    if (zz == pp) return kPosInf;
    return std::log(std::abs(R * R - std::conj(pp) * zz)) - std::log(R * std::abs(zz - pp));
}

/// Green function of a model domain with the given pole, sampled on the
/// grid (defined on the model's interior only; pole cell is a +inf
/// marker). Disks use the closed form; annuli and rectangles split off
/// the logarithmic singularity and relax the harmonic remainder.
inline ScalarField green_function(GridPtr grid, const ModelDomain& dom, Point pole,
                                  SolveStats* stats_out = nullptr, const SolveOptions& opt = {}) {
    if (dom.kind == ModelDomain::Kind::Interval)
        throw PreconditionError("green_function: interval domains carry only the "
                                "harmonic-measure example in this library");
    if (!dom.contains(pole) || dom.boundary_distance(pole) < 2 * grid->h())
        throw PreconditionError("green_function: pole must lie strictly inside the domain");
    if (!dom.regular)
        throw PreconditionError("green_function: domain must be regular for the "
                                "Dirichlet problem");

    const GridDomain& g = *grid;
    if (dom.kind == ModelDomain::Kind::Disk) {
        ScalarField out(grid, 0.0, false);
        for (long idx = 0; idx < g.size(); ++idx) {
            Point z = g.pos(static_cast<int>(idx));
            if (!dom.contains(z)) continue;
            out[idx] = green_disk(z, pole, dom.center, dom.radius);
            out.set_defined(idx, true);
        }
        out.add_marker({pole, -1, +1});
        if (stats_out) *stats_out = SolveStats{};
        return out;
    }

    // g = H - log|z - pole| with H harmonic, H = log|zeta - pole| on the
    // boundary.
    std::vector<uint8_t> active(g.size(), 0);
    ScalarField u(grid, 0.0);
    bool any = false;
    for (long idx = 0; idx < g.size(); ++idx) {
        if (dom.contains(g.pos(static_cast<int>(idx)))) {
            active[idx] = 1;
            any = true;
        }
    }
    if (!any) throw PreconditionError("green_function: grid does not resolve the domain");
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            long idx = g.index(i, j);
            if (active[idx]) continue;
            bool adj = (i > 0 && active[g.index(i - 1, j)]) ||
                       (i + 1 < g.nx() && active[g.index(i + 1, j)]) ||
                       (j > 0 && active[g.index(i, j - 1)]) ||
                       (j + 1 < g.ny() && active[g.index(i, j + 1)]);
            if (adj) u[idx] = std::log(std::abs(g.pos(i, j) - pole));
        }
    // Border cells of the box cannot relax; treat them as data if active.
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if ((i == 0 || j == 0 || i == g.nx() - 1 || j == g.ny() - 1) && active[g.index(i, j)])
                active[g.index(i, j)] = 0;

    auto stats = relax_dirichlet(u, active, nullptr, opt);
    if (stats_out) *stats_out = stats;

    ScalarField out(grid, 0.0, false);
    for (long idx = 0; idx < g.size(); ++idx) {
        Point z = g.pos(static_cast<int>(idx));
        if (!dom.contains(z)) continue;
        double v = u[idx] - std::log(std::abs(z - pole));
        out[idx] = std::isfinite(v) ? v : ScalarField::kValueFloor;
        out.set_defined(idx, true);
    }
    out.add_marker({pole, -1, +1});
    return out;
}

/// Extension of a Green field to the whole grid box: limsup values
/// (upper envelope of inner neighbors) on the boundary, 0 outside the
/// closure. The result is defined everywhere and nonnegative.
inline ScalarField extend_green(const ScalarField& gfield, const ModelDomain& dom) {
    const GridDomain& g = gfield.dom();
    ScalarField out(gfield.grid(), 0.0);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            long idx = g.index(i, j);
            Point z = g.pos(i, j);
            if (dom.contains(z) && gfield.defined(idx)) {
                out[idx] = std::max(0.0, gfield[idx]);
                continue;
            }
            // Upper envelope of the inside neighbors, else 0. The envelope
            // row holds closure values, not interior samples; it is
            // excluded from sub-mean-value scans.
            double env = 0.0;
            bool touches = false;
            const std::pair<int, int> nb[4] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
            for (auto [ii, jj] : nb) {
                if (!g.in_bounds(ii, jj)) continue;
                if (dom.contains(g.pos(ii, jj)) && gfield.defined(ii, jj)) {
                    env = std::max(env, gfield.at(ii, jj));
                    touches = true;
                }
            }
            out[idx] = env;
            if (touches) out.mark_scan_skip(idx);
        }
    for (const auto& m : gfield.markers()) out.add_marker(m);
    return out;
}

/// Harmonic measure of a model domain at x0 as a boundary measure:
/// atoms on boundary nodes, total mass 1.
///   disk      - Poisson kernel weights on `boundary_nodes` points;
///   interval  - the two endpoint atoms reproducing affine functions;
///   annulus/rectangle - exit distribution of the grid random walk,
///                       collected from the discrete Green flux.
inline RieszCharge harmonic_measure(GridPtr grid, const ModelDomain& dom, Point x0,
                                    int boundary_nodes = 4096,
                                    SolveStats* stats_out = nullptr,
                                    const SolveOptions& opt = {}) {
    RieszCharge mu(grid);
    if (dom.kind == ModelDomain::Kind::Interval) {
        double x = x0.real();
        if (!(dom.a < x && x < dom.b) || x0.imag() != 0.0)
            throw PreconditionError("harmonic_measure: x0 outside the interval");
        const double len = dom.b - dom.a;
        mu.add_atom(Point(dom.a, 0.0), (dom.b - x) / len);
        mu.add_atom(Point(dom.b, 0.0), (x - dom.a) / len);
        return mu;
    }
    if (!dom.contains(x0))
        throw PreconditionError("harmonic_measure: x0 must lie strictly inside");

    if (dom.kind == ModelDomain::Kind::Disk) {
        const int K = boundary_nodes;
        const Point w = (x0 - dom.center) / dom.radius;
        const double w2 = std::norm(w);
        std::vector<double> weight(K);
        double total = 0.0;
        for (int k = 0; k < K; ++k) {
            double th = 2.0 * std::numbers::pi * k / K;
            Point e = std::polar(1.0, th);
            weight[k] = (1.0 - w2) / std::norm(e - w);
            total += weight[k];
        }
        for (int k = 0; k < K; ++k) {
            double th = 2.0 * std::numbers::pi * k / K;
            mu.add_atom(dom.center + std::polar(dom.radius, th), weight[k] / total);
        }
        return mu;
    }

    // Grid exit distribution: solve n(c) = avg(n) + e_{x0} with absorbing
    // boundary, then exit mass at a boundary node is the adjacent visit
    // flux / 4.
    const GridDomain& g = *grid;
    std::vector<uint8_t> active(g.size(), 0);
    for (long idx = 0; idx < g.size(); ++idx)
        if (dom.contains(g.pos(static_cast<int>(idx)))) active[idx] = 1;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if ((i == 0 || j == 0 || i == g.nx() - 1 || j == g.ny() - 1) && active[g.index(i, j)])
                active[g.index(i, j)] = 0;

    auto [ci, cj] = g.nearest_node(x0);
    if (!active[g.index(ci, cj)])
        throw PreconditionError("harmonic_measure: x0 not resolved by the grid");
    std::vector<double> rhs4(g.size(), 0.0);
    rhs4[g.index(ci, cj)] = 4.0;

    ScalarField visits(grid, 0.0);
    auto stats = relax_dirichlet(visits, active, &rhs4, opt);
    if (stats_out) *stats_out = stats;

    double total = 0.0;
    std::vector<std::pair<int, double>> exits;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            long idx = g.index(i, j);
            if (active[idx]) continue;
            double flux = 0.0;
            const std::pair<int, int> nb[4] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
            for (auto [ii, jj] : nb)
                if (g.in_bounds(ii, jj) && active[g.index(ii, jj)])
                    flux += visits[g.index(ii, jj)] * 0.25;
            if (flux > 0.0) {
                exits.emplace_back(static_cast<int>(idx), flux);
                total += flux;
            }
        }
    if (total <= 0) throw PreconditionError("harmonic_measure: degenerate exit distribution");
    for (auto [idx, flux] : exits) mu.add_atom(g.pos(idx), flux / total);
    return mu;
}

}  // namespace potlab
