#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "potlab/errors.hpp"
#include "potlab/field.hpp"

namespace potlab {

struct SolveOptions {
    double tolerance = 1e-10;  // successive sup-difference
    long max_sweeps = 1'000'000;
    double omega = 0.0;  // 0 = automatic SOR factor from the grid size
};

struct SolveStats {
    long sweeps = 0;
    double final_step = 0.0;
    double omega = 0.0;
    bool converged = false;
};

namespace detail {

inline double auto_omega(const GridDomain& g) {
    double L = std::max(g.nx(), g.ny());
    return 2.0 / (1.0 + std::sin(std::numbers::pi / L));
}

}  // namespace detail

/// Red/black SOR for the 5-point Laplace/Poisson problem on the cells
/// where `active` is set. Non-active cells act as Dirichlet data and are
/// read from `u` untouched; every neighbor of an active cell must be
/// active or carry data. `rhs4` is 4x the point load (u <- (sum + rhs4)/4).
inline SolveStats relax_dirichlet(ScalarField& u, const std::vector<uint8_t>& active,
                                  const std::vector<double>* rhs4 = nullptr,
                                  const SolveOptions& opt = {}) {
    const GridDomain& g = u.dom();
    SolveStats stats;
    stats.omega = opt.omega > 0 ? opt.omega : detail::auto_omega(g);

    std::vector<int> cells[2];  // red/black partitions
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i)
            if (active[g.index(i, j)]) cells[(i + j) & 1].push_back(g.index(i, j));
    if (cells[0].empty() && cells[1].empty())
        throw PreconditionError("relax_dirichlet: nothing to solve");

    const int nx = g.nx();
    for (long sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        double step = 0.0;
        for (int color = 0; color < 2; ++color)
            for (int idx : cells[color]) {
                double target = u[idx - 1] + u[idx + 1] + u[idx - nx] + u[idx + nx];
                if (rhs4) target += (*rhs4)[idx];
                target *= 0.25;
                double delta = stats.omega * (target - u[idx]);
                u[idx] += delta;
                step = std::max(step, std::abs(delta));
            }
        stats.sweeps = sweep;
        stats.final_step = step;
        if (step < opt.tolerance) {
            stats.converged = true;
            break;
        }
    }
    if (!stats.converged)
        throw ConvergenceError("relax_dirichlet: sweep cap reached", stats.sweeps,
                               stats.final_step);
    return stats;
}

/// Dirichlet problem on the grid's interior: boundary nodes (non-interior
/// nodes adjacent to the interior) carry `data`; the solution is harmonic
/// to stencil accuracy inside.
inline ScalarField solve_dirichlet(GridPtr grid, const std::function<double(Point)>& data,
                                   SolveStats* stats_out = nullptr,
                                   const SolveOptions& opt = {}) {
    const GridDomain& g = *grid;
    ScalarField u(grid, 0.0);

    std::vector<uint8_t> active(g.size(), 0);
    for (long idx = 0; idx < g.size(); ++idx) active[idx] = g.interior(static_cast<int>(idx));

    double mean = 0.0;
    long nb = 0;
    for (int idx : g.boundary_nodes()) {
        double v = data(g.pos(idx));
        if (!std::isfinite(v)) throw PreconditionError("solve_dirichlet: unbounded data");
        u[idx] = v;
        mean += v;
        ++nb;
    }
    if (nb == 0) throw PreconditionError("solve_dirichlet: no boundary nodes");
    mean /= nb;
    for (long idx = 0; idx < g.size(); ++idx)
        if (active[idx]) u[idx] = mean;  // warm start

    auto stats = relax_dirichlet(u, active, nullptr, opt);
    if (stats_out) *stats_out = stats;

    // Cells that are neither relaxed nor boundary data are undefined.
    std::vector<uint8_t> keep(g.size(), 0);
    for (long idx = 0; idx < g.size(); ++idx) keep[idx] = active[idx];
    for (int idx : g.boundary_nodes()) keep[idx] = 1;
    for (long idx = 0; idx < g.size(); ++idx) u.set_defined(idx, keep[idx]);
    return u;
}

}  // namespace potlab
