#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "potlab/errors.hpp"
#include "potlab/grid.hpp"

namespace potlab {

/// Point atom of a signed measure.
struct Atom {
    Point where{0.0, 0.0};
    double mass = 0.0;
};

/// Signed Borel measure on a grid domain: finitely many point atoms plus a
/// per-cell density (mass per cell, not per area). Positive and negative
/// parts are cellwise singular by construction of hahn_jordan().
class RieszCharge {
public:
    RieszCharge() = default;
    explicit RieszCharge(GridPtr grid) : grid_(std::move(grid)) {
        cell_mass_.assign(grid_->size(), 0.0);
    }

    const GridPtr& grid() const { return grid_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    std::vector<Atom>& atoms() { return atoms_; }
    const std::vector<double>& cell_mass() const { return cell_mass_; }

    double cell(long idx) const { return cell_mass_[idx]; }
    void set_cell(long idx, double m) { cell_mass_[idx] = m; }
    void add_cell(long idx, double m) { cell_mass_[idx] += m; }
    void add_atom(Point p, double mass) { atoms_.push_back({p, mass}); }

    double total() const {
        double t = 0.0;
        for (double m : cell_mass_) t += m;
        for (const auto& a : atoms_) t += a.mass;
        return t;
    }

    double total_variation() const {
        double t = 0.0;
        for (double m : cell_mass_) t += std::abs(m);
        for (const auto& a : atoms_) t += std::abs(a.mass);
        return t;
    }

    /// Mass of the open ball B(x, r): atoms plus cell masses whose centers
    /// lie inside.
    double ball_mass(Point x, double r) const {
        if (!(r > 0)) throw PreconditionError("ball_mass needs r > 0");
        double t = 0.0;
        for (const auto& a : atoms_)
            if (std::abs(a.where - x) < r) t += a.mass;
        const auto& g = *grid_;
        // Only scan the bounding square of the ball.
        auto [i0, j0] = g.nearest_node(Point(x.real() - r, x.imag() - r));
        auto [i1, j1] = g.nearest_node(Point(x.real() + r, x.imag() + r));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                double m = cell_mass_[g.index(i, j)];
                if (m != 0.0 && std::abs(g.pos(i, j) - x) < r) t += m;
            }
        return t;
    }

    /// Same, for the total variation |nu|.
    double ball_mass_tv(Point x, double r) const {
        if (!(r > 0)) throw PreconditionError("ball_mass needs r > 0");
        double t = 0.0;
        for (const auto& a : atoms_)
            if (std::abs(a.where - x) < r) t += std::abs(a.mass);
        const auto& g = *grid_;
        auto [i0, j0] = g.nearest_node(Point(x.real() - r, x.imag() - r));
        auto [i1, j1] = g.nearest_node(Point(x.real() + r, x.imag() + r));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                double m = cell_mass_[g.index(i, j)];
                if (m != 0.0 && std::abs(g.pos(i, j) - x) < r) t += std::abs(m);
            }
        return t;
    }

    double nearest_atom_distance(Point x) const {
        double d = kPosInf;
        for (const auto& a : atoms_)
            if (a.mass != 0.0) d = std::min(d, std::abs(a.where - x));
        return d;
    }

    RieszCharge scaled(double c) const {
        RieszCharge out = *this;
        for (auto& m : out.cell_mass_) m *= c;
        for (auto& a : out.atoms_) a.mass *= c;
        return out;
    }

    static RieszCharge subtract(const RieszCharge& a, const RieszCharge& b) {
        if (a.grid_ != b.grid_) throw PreconditionError("charges live on different grids");
        RieszCharge out = a;
        for (long idx = 0; idx < static_cast<long>(out.cell_mass_.size()); ++idx)
            out.cell_mass_[idx] -= b.cell_mass_[idx];
        for (const auto& at : b.atoms_) out.atoms_.push_back({at.where, -at.mass});
        out.merge_coincident_atoms();
        return out;
    }

    static RieszCharge add(const RieszCharge& a, const RieszCharge& b) {
        return subtract(a, b.scaled(-1.0));
    }

    /// Keep only atoms/cells whose location satisfies pred.
    RieszCharge restricted(const std::function<bool(Point)>& pred) const {
        RieszCharge out(grid_);
        for (const auto& a : atoms_)
            if (pred(a.where)) out.atoms_.push_back(a);
        for (long idx = 0; idx < static_cast<long>(cell_mass_.size()); ++idx)
            if (cell_mass_[idx] != 0.0 && pred(grid_->pos(static_cast<int>(idx))))
                out.cell_mass_[idx] = cell_mass_[idx];
        return out;
    }

    void merge_coincident_atoms(double tol = 1e-12) {
        std::vector<Atom> merged;
        for (const auto& a : atoms_) {
            bool hit = false;
            for (auto& m : merged)
                if (std::abs(m.where - a.where) <= tol) {
                    m.mass += a.mass;
                    hit = true;
                    break;
                }
            if (!hit) merged.push_back(a);
        }
        std::erase_if(merged, [](const Atom& a) { return a.mass == 0.0; });
        atoms_ = std::move(merged);
    }

private:
    GridPtr grid_;
    std::vector<Atom> atoms_;
    std::vector<double> cell_mass_;
};

/// Hahn-Jordan decomposition: unique split nu = nu+ - nu- with both parts
/// positive and mutually singular (each cell/atom lands in exactly one).
inline std::pair<RieszCharge, RieszCharge> hahn_jordan(const RieszCharge& c) {
    RieszCharge pos(c.grid()), neg(c.grid());
    const auto& cm = c.cell_mass();
    for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx) {
        if (cm[idx] > 0)
            pos.set_cell(idx, cm[idx]);
        else if (cm[idx] < 0)
            neg.set_cell(idx, -cm[idx]);
    }
    for (const auto& a : c.atoms()) {
        if (a.mass > 0)
            pos.add_atom(a.where, a.mass);
        else if (a.mass < 0)
            neg.add_atom(a.where, -a.mass);
    }
    return {std::move(pos), std::move(neg)};
}

inline double ball_mass(const RieszCharge& c, Point x, double r) { return c.ball_mass(x, r); }

}  // namespace potlab
