#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "potlab/charge.hpp"
#include "potlab/errors.hpp"
#include "potlab/field.hpp"
#include "potlab/kernels.hpp"

namespace potlab {

struct RieszOptions {
    /// Physical half-width of the square ring used to recover atom
    /// masses around markers; the flux error scales like (h/r)^2.
    /// Shrunk automatically to respect marker separation and the region
    /// edge, and capped in cells.
    double ring_radius = 0.15;
    int max_ring_cells = 96;
    /// A non-marker cell whose stencil mass exceeds this and is a local
    /// max gets promoted to an atom.
    double atom_threshold = 0.5;
    int promotion_ring_cells = 8;
};

namespace detail {

/// Discrete flux of u through the boundary of the cell square of
/// half-width k centered at (ci, cj): sum of (u_out - u_in) over grid
/// edges leaving the square. Equals the sum of 5-point Laplacian masses
/// (times h^2) over the square, but needs no values inside it.
inline std::optional<double> square_ring_flux(const ScalarField& u, int ci, int cj, int k) {
    const GridDomain& g = u.dom();
    double flux = 0.0;
    auto edge = [&](int ii, int ji, int io, int jo) -> bool {
        if (!u.defined(ii, ji) || !u.defined(io, jo)) return false;
        flux += u.at(io, jo) - u.at(ii, ji);
        return true;
    };
    for (int d = -k; d <= k; ++d) {
        // right, left, top, bottom faces
        if (!edge(ci + k, cj + d, ci + k + 1, cj + d)) return std::nullopt;
        if (!edge(ci - k, cj + d, ci - k - 1, cj + d)) return std::nullopt;
        if (!edge(ci + d, cj + k, ci + d, cj + k + 1)) return std::nullopt;
        if (!edge(ci + d, cj - k, ci + d, cj - k - 1)) return std::nullopt;
    }
    (void)g;
    return flux;
}

/// Largest admissible ring half-width for a marker: limited by the grid
/// box, by other markers (rings must separate), and by the requested cap.
inline int ring_radius_for(const ScalarField& u, const Marker& m, const RieszOptions& opt) {
    const GridDomain& g = u.dom();
    int ci = g.ix(m.cell), cj = g.iy(m.cell);
    int k = std::min(opt.max_ring_cells,
                     static_cast<int>(std::floor(opt.ring_radius / g.h())));
    k = std::min(k, ci - 1);
    k = std::min(k, g.nx() - 2 - ci);
    k = std::min(k, cj - 1);
    k = std::min(k, g.ny() - 2 - cj);
    for (const auto& other : u.markers()) {
        if (other.cell == m.cell) continue;
        double d = std::abs(other.where - m.where) / g.h();
        k = std::min(k, static_cast<int>(std::floor(d / 2.0)) - 1);
    }
    return k;
}

}  // namespace detail

/// Riesz measure nu_u = Delta u / s_{m-1} of a grid field (m = 2).
/// Smooth mass comes from the 5-point stencil per cell; each marker
/// contributes an atom whose mass is the ring-sum flux / 2 pi, with the
/// cells under the ring excluded from the density (the atom absorbs them).
inline RieszCharge riesz_measure(const ScalarField& u, const RieszOptions& opt = {}) {
    const GridDomain& g = u.dom();
    const double s1 = sphere_constant(Dimension(2));  // 2 pi
    RieszCharge out(u.grid());

    std::vector<uint8_t> excluded(g.size(), 0);
    auto exclude_square = [&](int ci, int cj, int k) {
        for (int j = std::max(0, cj - k); j <= std::min(g.ny() - 1, cj + k); ++j)
            for (int i = std::max(0, ci - k); i <= std::min(g.nx() - 1, ci + k); ++i)
                excluded[g.index(i, j)] = 1;
    };

    for (const auto& m : u.markers()) {
        int k = detail::ring_radius_for(u, m, opt);
        if (k < 2)
            throw PreconditionError("riesz_measure: marker too close to region edge or "
                                    "another marker for a ring sum");
        auto flux = detail::square_ring_flux(u, g.ix(m.cell), g.iy(m.cell), k);
        if (!flux)
            throw PreconditionError("riesz_measure: ring around marker leaves the region");
        out.add_atom(m.where, *flux / s1);
        exclude_square(g.ix(m.cell), g.iy(m.cell), k);
    }

    long stencil_cells = 0;
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            long idx = g.index(i, j);
            if (excluded[idx]) continue;
            if (!u.defined(i, j) || !u.defined(i - 1, j) || !u.defined(i + 1, j) ||
                !u.defined(i, j - 1) || !u.defined(i, j + 1))
                continue;
            ++stencil_cells;
            double lap_h2 = u.at(i - 1, j) + u.at(i + 1, j) + u.at(i, j - 1) + u.at(i, j + 1) -
                            4.0 * u.at(i, j);
            if (lap_h2 != 0.0) out.set_cell(idx, lap_h2 / s1);
        }
    if (stencil_cells == 0 && u.markers().empty())
        throw PreconditionError("riesz_measure: region too small for the stencil");

    // Promote isolated heavy cells (near-node singularities without a
    // declared marker) to atoms.
    std::vector<int> candidates;
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            long idx = g.index(i, j);
            double m = std::abs(out.cell(idx));
            if (m < opt.atom_threshold) continue;
            bool local_max = true;
            for (int dj = -1; dj <= 1 && local_max; ++dj)
                for (int di = -1; di <= 1; ++di)
                    if ((di || dj) && std::abs(out.cell(g.index(i + di, j + dj))) > m) {
                        local_max = false;
                        break;
                    }
            if (local_max) candidates.push_back(static_cast<int>(idx));
        }
    for (int idx : candidates) {
        if (excluded[idx] || std::abs(out.cell(idx)) < opt.atom_threshold) continue;
        int ci = g.ix(idx), cj = g.iy(idx);
        int k = opt.promotion_ring_cells;
        k = std::min({k, ci - 1, g.nx() - 2 - ci, cj - 1, g.ny() - 2 - cj});
        if (k < 2) continue;
        auto flux = detail::square_ring_flux(u, ci, cj, k);
        if (!flux) continue;
        out.add_atom(g.pos(ci, cj), *flux / s1);
        for (int j = std::max(0, cj - k); j <= std::min(g.ny() - 1, cj + k); ++j)
            for (int i = std::max(0, ci - k); i <= std::min(g.nx() - 1, ci + k); ++i) {
                out.set_cell(g.index(i, j), 0.0);
                excluded[g.index(i, j)] = 1;
            }
    }
    return out;
}

struct DomCheckResult {
    bool convergent = false;
    /// Dyadic shell terms |nu|(x, t_j) * dt / t_j^{m-1}, outermost first.
    std::vector<double> shell_terms;
    double near_mass = 0.0;  // |nu|(B(x, 4h))
    bool atom_at_center = false;

    explicit operator bool() const { return convergent; }
};

/// Discrete test of Eq.-style convergence of int_0^{r_x} |nu|(x,t)/t^{m-1} dt:
/// dyadic shells from r_x down to 4h; below 4h atoms decide, and leftover
/// mass inside B(x, 4h) above `eps` counts as divergence.
inline DomCheckResult dom_check(const RieszCharge& c, Point x, double r_x,
                                Dimension dim = Dimension(2), double eps = 0.05) {
    if (!(r_x > 0)) throw PreconditionError("dom_check needs r_x > 0");
    const double h = c.grid()->h();
    DomCheckResult res;
    double t = r_x;
    while (t / 2 >= 4 * h) {
        double tv = c.ball_mass_tv(x, t / 2);
        res.shell_terms.push_back(tv * (t - t / 2) / std::pow(t / 2, dim.value() - 1));
        t /= 2;
    }
    res.near_mass = c.ball_mass_tv(x, 4 * h);
    res.atom_at_center = c.nearest_atom_distance(x) < 4 * h;
    res.convergent = !res.atom_at_center && res.near_mass <= eps;
    return res;
}

/// Trapezoid average of u over the circle |z - x| = r with K nodes,
/// bilinear interpolation. Rejects circles leaving the region.
inline double sphere_average(const ScalarField& u, Point x, double r, int K = 256) {
    if (!(r > 0)) throw PreconditionError("sphere_average needs r > 0");
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
        double th = 2.0 * std::numbers::pi * k / K;
        Point z = x + Point(r * std::cos(th), r * std::sin(th));
        auto v = u.interpolate(z);
        if (!v) throw PreconditionError("sphere_average: circle exits the region");
        sum += *v;
    }
    return sum / K;
}

/// Cell-sum average of u over B(x, r), normalized by the covered cell
/// area so constants average exactly. Marker cells are skipped (they
/// carry no area).
inline double ball_average(const ScalarField& u, Point x, double r) {
    if (!(r > 0)) throw PreconditionError("ball_average needs r > 0");
    const GridDomain& g = u.dom();
    auto [i0, j0] = g.nearest_node(Point(x.real() - r, x.imag() - r));
    auto [i1, j1] = g.nearest_node(Point(x.real() + r, x.imag() + r));
    double sum = 0.0;
    long count = 0;
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
            if (std::abs(g.pos(i, j) - x) >= r) continue;
            long idx = g.index(i, j);
            if (u.marker_at(idx)) continue;
            if (!u.defined(idx)) throw PreconditionError("ball_average: ball exits the region");
            sum += u[idx];
            ++count;
        }
    if (count == 0) throw PreconditionError("ball_average: radius below grid resolution");
    return sum / static_cast<double>(count);
}

struct SubharmonicOptions {
    /// Absolute slack on the sub-mean-value test; negative means the
    /// auto default 0.5 h^2, matched to the (h^2/4) Delta-u scale of the
    /// deviation on smooth fields. The lattice noise of a sampled log
    /// pole at the skip distance is ~1/(4 k^4) per unit mass, well below.
    double tolerance = -1.0;
    /// Cells within this many spacings of a marker are skipped; the
    /// stencil is meaningless against clipped singular values.
    double marker_skip_cells = 16.0;

    double effective_tolerance(double h) const {
        return tolerance >= 0 ? tolerance : 0.5 * h * h;
    }
};

/// Discrete sub-mean-value scan: returns the cells where
/// u(center) > average of the 4 neighbors + tolerance. Empty result
/// certifies discrete subharmonicity of the sampled field.
inline std::vector<int> check_subharmonic(const ScalarField& u,
                                          const SubharmonicOptions& opt = {}) {
    const GridDomain& g = u.dom();
    std::vector<int> violations;
    const double tol = opt.effective_tolerance(g.h());
    const double skip = opt.marker_skip_cells * g.h();
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            if (!u.defined(i, j) || !u.defined(i - 1, j) || !u.defined(i + 1, j) ||
                !u.defined(i, j - 1) || !u.defined(i, j + 1))
                continue;
            if (u.scan_skip(g.index(i, j))) continue;
            if (u.marker_distance(g.pos(i, j)) < skip) continue;
            double avg = 0.25 * (u.at(i - 1, j) + u.at(i + 1, j) + u.at(i, j - 1) +
                                 u.at(i, j + 1));
            if (u.at(i, j) > avg + tol) violations.push_back(g.index(i, j));
        }
    return violations;
}

/// delta-subharmonic majorant M = u1 - u2 with its signed Riesz charge
/// and the dom-M mask (cells where the shell integral test passes).
struct MajorantSpec {
    ScalarField u1, u2;
    RieszCharge charge;
    std::vector<uint8_t> dom_mask;
    int dom_stride = 1;

    const GridPtr& grid() const { return u1.grid(); }

    /// M at a point; +inf outside dom per the majorant convention.
    double value_at(Point z) const {
        auto a = u1.interpolate(z);
        auto b = u2.interpolate(z);
        if (!a || !b) return kPosInf;
        return *a - *b;
    }

    bool in_dom(Point z) const {
        auto [i, j] = u1.dom().nearest_node(z);
        return dom_mask[u1.dom().index(i, j)] != 0;
    }

    static MajorantSpec zero(const GridPtr& grid) {
        MajorantSpec m;
        m.u1 = ScalarField(grid, 0.0);
        m.u2 = ScalarField(grid, 0.0);
        m.charge = RieszCharge(grid);
        m.dom_mask.assign(grid->size(), 1);
        return m;
    }
};

/// Builds a MajorantSpec from two subharmonic fields. Rejects (with the
/// violation list) if either field fails the discrete scan. The dom mask
/// is sampled at `stride` and filled blockwise.
inline MajorantSpec make_delta_sbh(const ScalarField& u1, const ScalarField& u2,
                                   int stride = 2, const SubharmonicOptions& opt = {}) {
    ScalarField::require_same_grid(u1, u2);
    auto v1 = check_subharmonic(u1, opt);
    if (!v1.empty())
        throw PreconditionError("make_delta_sbh: u1 fails subharmonicity", std::move(v1));
    auto v2 = check_subharmonic(u2, opt);
    if (!v2.empty())
        throw PreconditionError("make_delta_sbh: u2 fails subharmonicity", std::move(v2));

    MajorantSpec spec;
    spec.u1 = u1;
    spec.u2 = u2;
    spec.charge = RieszCharge::subtract(riesz_measure(u1), riesz_measure(u2));
    spec.dom_stride = stride;
    const GridDomain& g = u1.dom();
    spec.dom_mask.assign(g.size(), 0);

    // Cheap local criterion equivalent to dom_check's verdict: no atom
    // within 4h and small total-variation mass in B(x, 4h).
    const double r4 = 4 * g.h();
    std::vector<double> atom_dist(g.size(), kPosInf);
    for (const auto& a : spec.charge.atoms()) {
        if (a.mass == 0.0) continue;
        auto [ci, cj] = g.nearest_node(a.where);
        int reach = 6;
        for (int j = std::max(0, cj - reach); j <= std::min(g.ny() - 1, cj + reach); ++j)
            for (int i = std::max(0, ci - reach); i <= std::min(g.nx() - 1, ci + reach); ++i) {
                double d = std::abs(g.pos(i, j) - a.where);
                atom_dist[g.index(i, j)] = std::min(atom_dist[g.index(i, j)], d);
            }
    }
    const double eps = 0.05;
    for (int j = 0; j < g.ny(); j += stride)
        for (int i = 0; i < g.nx(); i += stride) {
            Point z = g.pos(i, j);
            bool ok = atom_dist[g.index(i, j)] >= r4 && spec.charge.ball_mass_tv(z, r4) <= eps;
            for (int dj = 0; dj < stride && j + dj < g.ny(); ++dj)
                for (int di = 0; di < stride && i + di < g.nx(); ++di)
                    spec.dom_mask[g.index(i + di, j + dj)] = ok ? 1 : 0;
        }
    // Markers of u1/u2 are -inf points: never in dom.
    for (const auto& m : u1.markers()) spec.dom_mask[m.cell] = 0;
    for (const auto& m : u2.markers()) spec.dom_mask[m.cell] = 0;
    return spec;
}

}  // namespace potlab
