#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "potlab/charge.hpp"
#include "potlab/fields.hpp"
#include "potlab/parallel.hpp"
#include "potlab/testfn.hpp"

namespace potlab {

/// Compactly supported probability measure mu with u(x0) <= int u dmu for
/// subharmonic u. Verification is necessarily a testbank check; the
/// defect records how far the raw input was from unit mass before
/// normalization.
struct JensenMeasure {
    Point x0{0.0, 0.0};
    RieszCharge measure;
    double normalization_defect = 0.0;

    const GridPtr& grid() const { return measure.grid(); }
};

/// Normalizes a positive charge into a JensenMeasure. Cell masses must
/// stay off the outer collars (collar-level stencil dust below spill_tol
/// is dropped into the defect); atoms may sit on the closed boundary so
/// the classical harmonic measure of D itself remains expressible.
inline JensenMeasure make_jensen_measure(Point x0, RieszCharge raw, double neg_tol = 1e-9,
                                         double spill_tol = 1e-4) {
    const GridDomain& g = *raw.grid();
    const Rect& box = g.box();
    for (auto& a : raw.atoms()) {
        if (a.mass < -neg_tol)
            throw PreconditionError("jensen measure: negative atom mass");
        if (a.where.real() < box.x0 - 1e-12 || a.where.real() > box.x1 + 1e-12 ||
            a.where.imag() < box.y0 - 1e-12 || a.where.imag() > box.y1 + 1e-12)
            throw PreconditionError("jensen measure: atom outside the closed domain");
    }
    double clipped = 0.0, spilled = 0.0;
    RieszCharge clean(raw.grid());
    for (const auto& a : raw.atoms())
        if (a.mass > 0) clean.add_atom(a.where, a.mass);
    for (long idx = 0; idx < g.size(); ++idx) {
        double m = raw.cell(idx);
        if (m < 0) {
            if (m < -neg_tol) clipped += -m;
            continue;
        }
        if (m == 0.0) continue;
        if (!g.interior(static_cast<int>(idx)) || g.depth(static_cast<int>(idx)) <= 2) {
            spilled += m;
            continue;
        }
        clean.set_cell(idx, m);
    }
    if (clipped > 0.05)
        throw PreconditionError("jensen measure: input charge is substantially signed");
    if (spilled > spill_tol)
        throw PreconditionError("jensen measure: cell support must lie strictly inside D");
    double total = clean.total();
    if (!(total > 0)) throw PreconditionError("jensen measure: zero mass");
    JensenMeasure mu;
    mu.x0 = x0;
    mu.measure = clean.scaled(1.0 / total);
    mu.normalization_defect = std::abs(total - 1.0) + spilled;
    return mu;
}

inline JensenMeasure jensen_dirac(GridPtr grid, Point x0) {
    RieszCharge c(std::move(grid));
    c.add_atom(x0, 1.0);
    return make_jensen_measure(x0, std::move(c));
}

/// Uniform unit mass on the circle |z - x0| = r, as K equal atoms.
inline JensenMeasure jensen_uniform_circle(GridPtr grid, Point x0, double r, int K = 512) {
    RieszCharge c(std::move(grid));
    for (int k = 0; k < K; ++k)
        c.add_atom(x0 + std::polar(r, 2.0 * std::numbers::pi * (k + 0.5) / K), 1.0 / K);
    return make_jensen_measure(x0, std::move(c));
}

/// int u d(charge): atoms by bilinear interpolation, cells by direct
/// lookup. Marker-clipped values participate with their floor, so a log
/// witness against an atom sitting on its pole reports a huge negative
/// integral rather than an error.
inline double integrate_field(const ScalarField& u, const RieszCharge& charge) {
    double total = 0.0;
    for (const auto& a : charge.atoms()) {
        if (a.mass == 0.0) continue;
        total += a.mass * u.interpolate_or_throw(a.where, "integrand");
    }
    const auto& cm = charge.cell_mass();
    for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx) {
        if (cm[idx] == 0.0) continue;
        if (!u.defined(idx))
            throw PreconditionError("integrate_field: charge mass on undefined cell");
        total += cm[idx] * u[idx];
    }
    return total;
}

/// The 10-field default testbank for is_jensen: log kernels over a small
/// lattice of poles, the standard smooth subharmonic fields, and two
/// max-combinations. Fixed so failures are reproducible.
inline std::vector<std::pair<std::string, ScalarField>> default_testbank(GridPtr grid) {
    std::vector<std::pair<std::string, ScalarField>> bank;
    auto log_at = [&](Point a) {
        return ScalarField::sample(
            grid, [a](Point z) { return std::log(std::abs(z - a)); }, {Marker{a, -1, -1}});
    };
    bank.emplace_back("log|z-0.3|", log_at({0.3, 0.0}));
    bank.emplace_back("log|z+0.25-0.35i|", log_at({-0.25, 0.35}));
    bank.emplace_back("log|z-0.55i|", log_at({0.0, 0.55}));
    bank.emplace_back("|z|^2", ScalarField::sample(grid, [](Point z) { return std::norm(z); }));
    bank.emplace_back("Re z", ScalarField::sample(grid, [](Point z) { return z.real(); }));
    bank.emplace_back("Im z", ScalarField::sample(grid, [](Point z) { return z.imag(); }));
    bank.emplace_back("Re z^2",
                      ScalarField::sample(grid, [](Point z) { return (z * z).real(); }));
    bank.emplace_back("Im z^2",
                      ScalarField::sample(grid, [](Point z) { return (z * z).imag(); }));
    bank.emplace_back("max(log|z-0.3|, log|z+0.3|)",
                      ScalarField::sample(
                          grid,
                          [](Point z) {
                              return std::max(std::log(std::abs(z - Point(0.3, 0.0))),
                                              std::log(std::abs(z + Point(0.3, 0.0))));
                          },
                          {Marker{{0.3, 0.0}, -1, -1}, Marker{{-0.3, 0.0}, -1, -1}}));
    bank.emplace_back("max(Re z, |z|^2 - 1/2)", ScalarField::sample(grid, [](Point z) {
                          return std::max(z.real(), std::norm(z) - 0.5);
                      }));
    return bank;
}

struct IsJensenReport {
    bool verdict = false;
    std::vector<std::pair<std::string, double>> margins;  // int u dmu - u(x0)
    double worst_margin = 0.0;
};

/// Jensen-measure test against a bank of subharmonic fields: every
/// margin int u dmu - u(x0) must clear -tolerance.
inline IsJensenReport is_jensen(const JensenMeasure& mu,
                                const std::vector<std::pair<std::string, ScalarField>>& bank,
                                double tolerance = 1e-3) {
    IsJensenReport rep;
    rep.worst_margin = kPosInf;
    for (const auto& [name, u] : bank) {
        double at_x0 = u.interpolate_or_throw(mu.x0, "testbank field");
        double margin = integrate_field(u, mu.measure) - at_x0;
        rep.margins.emplace_back(name, margin);
        rep.worst_margin = std::min(rep.worst_margin, margin);
    }
    rep.verdict = rep.worst_margin >= -tolerance;
    return rep;
}

inline IsJensenReport is_jensen(const JensenMeasure& mu, double tolerance = 1e-3) {
    return is_jensen(mu, default_testbank(mu.grid()), tolerance);
}

/// Logarithmic genus-0 potential of a Jensen measure:
/// V(y) = int (log|y - x| - log|y - x0|) dmu(x), extended by 0 at the
/// point at infinity. Evaluates lazily; materialize with field().
class LogPotential {
public:
    explicit LogPotential(JensenMeasure mu) : mu_(std::move(mu)) {}

    const JensenMeasure& measure() const { return mu_; }

    double eval(Point y) const {
        const double d0 = std::abs(y - mu_.x0);
        double total = 0.0;
        for (const auto& a : mu_.measure.atoms()) {
            if (std::abs(a.where - mu_.x0) < 1e-15) continue;  // kernel is 0
            total += a.mass * (std::log(std::abs(y - a.where)) - std::log(d0));
        }
        const auto& cm = mu_.measure.cell_mass();
        const GridDomain& g = *mu_.grid();
        for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx) {
            if (cm[idx] == 0.0) continue;
            Point x = g.pos(static_cast<int>(idx));
            if (std::abs(x - mu_.x0) < 1e-15) continue;
            total += cm[idx] * (std::log(std::abs(y - x)) - std::log(d0));
        }
        return total;
    }

    double eval(const ExtendedPoint& y) const { return y.at_infinity ? 0.0 : eval(y.p); }

    /// Grid field of the potential; the pole is marked when the measure
    /// puts mass away from x0.
    ScalarField field(int jobs = 0) const {
        GridPtr grid = mu_.grid();
        const GridDomain& g = *grid;
        std::vector<double> values(g.size());
        // Flatten the measure once; the inner loop is hot.
        struct Src {
            Point x;
            double m;
        };
        std::vector<Src> src;
        for (const auto& a : mu_.measure.atoms())
            if (a.mass != 0.0 && std::abs(a.where - mu_.x0) >= 1e-15)
                src.push_back({a.where, a.mass});
        const auto& cm = mu_.measure.cell_mass();
        for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx)
            if (cm[idx] != 0.0 && std::abs(g.pos(static_cast<int>(idx)) - mu_.x0) >= 1e-15)
                src.push_back({g.pos(static_cast<int>(idx)), cm[idx]});
        const Point x0 = mu_.x0;
        double off_pole_mass = 0.0;
        for (const auto& s : src) off_pole_mass += s.m;
        parallel_for(
            0, g.size(),
            [&](long idx) {
                const Point y = g.pos(static_cast<int>(idx));
                double t = 0.0;
                for (const auto& s : src) t += s.m * std::log(std::abs(y - s.x));
                values[idx] = t - off_pole_mass * std::log(std::abs(y - x0));
            },
            jobs);

        ScalarField out(grid, 0.0);
        for (long idx = 0; idx < g.size(); ++idx) {
            if (std::isfinite(values[idx])) {
                out[idx] = values[idx];
            } else {
                // A source sits exactly on this node.
                out[idx] = values[idx] > 0 ? ScalarField::kValueFloor : -ScalarField::kValueFloor;
                out.set_defined(idx, false);
            }
        }
        if (off_pole_mass > 0.01) out.add_marker({mu_.x0, -1, +1});
        return out;
    }

private:
    JensenMeasure mu_;
};

inline LogPotential log_potential(const JensenMeasure& mu) { return LogPotential(mu); }

/// int V d(charge) for a lazy potential.
inline double integrate_potential(const LogPotential& V, const RieszCharge& charge) {
    double total = 0.0;
    for (const auto& a : charge.atoms())
        if (a.mass != 0.0) total += a.mass * V.eval(a.where);
    const auto& cm = charge.cell_mass();
    const GridDomain& g = *charge.grid();
    for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx)
        if (cm[idx] != 0.0) total += cm[idx] * V.eval(g.pos(static_cast<int>(idx)));
    return total;
}

struct DualityOptions {
    PotentialCheckOptions checks{};
    /// Ring half-width (cells) for the pole flux; mass inside is the
    /// delta coefficient's business, not the cell density's.
    int pole_ring_cells = 8;
};

struct DualityResult {
    JensenMeasure mu;
    double ratio = 0.0;             // estimated pole normalization
    double dirac_coefficient = 0.0; // 1 - ratio, clamped to [0, 1]
    double clipped_negative = 0.0;  // stencil noise removed
};

/// Inverse of the duality map: mu = Delta V / s_1 off the pole plus
/// (1 - ratio) delta_{x0}. Rejects fields that fail the Jensen-potential
/// checks.
inline DualityResult duality_inverse(const ScalarField& V, Point x0,
                                     const DualityOptions& opt = {}) {
    auto rep = is_jensen_potential(V, x0, opt.checks);
    if (!rep.pass())
        throw PreconditionError("duality_inverse: not a Jensen potential (" +
                                    rep.failing_clause() + ")",
                                rep.sbh_violations);

    ScalarField W = V;
    bool has_pole_marker = false;
    for (const auto& m : W.markers()) has_pole_marker |= std::abs(m.where - x0) < 1e-12;
    if (!has_pole_marker) W.add_marker({x0, -1, +1});

    RieszOptions ropt;
    ropt.ring_radius = opt.pole_ring_cells * V.dom().h();
    auto nu = riesz_measure(W, ropt);

    RieszCharge cells(V.grid());
    double clipped = 0.0;
    const auto& cm = nu.cell_mass();
    for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx) {
        if (cm[idx] > 0)
            cells.set_cell(idx, cm[idx]);
        else
            clipped += -cm[idx];
    }
    // Keep only genuine off-pole atoms (promotions away from x0).
    for (const auto& a : nu.atoms())
        if (std::abs(a.where - x0) > 8 * V.dom().h() && a.mass > 0)
            cells.add_atom(a.where, a.mass);

    DualityResult res;
    res.ratio = rep.normalization.ratio;
    res.dirac_coefficient = std::clamp(1.0 - res.ratio, 0.0, 1.0);
    res.clipped_negative = clipped;
    if (res.dirac_coefficient > 0) cells.add_atom(x0, res.dirac_coefficient);
    res.mu = make_jensen_measure(x0, std::move(cells));
    return res;
}

struct PoissonJensenReport {
    double u_at_x0 = 0.0;
    double potential_integral = 0.0;  // int V_mu d(nu_u)
    double measure_integral = 0.0;    // int u dmu
    double residual = 0.0;
};

struct PoissonJensenOptions {
    SubharmonicOptions sbh{};
    /// Above this many charged cells the potential is materialized once
    /// instead of evaluated pointwise.
    long materialize_threshold = 20000;
};

/// Extended Poisson-Jensen identity u(x0) + int V_mu d(nu_u) = int u dmu;
/// returns both sides and the defect. Requires u subharmonic with
/// u(x0) finite.
inline PoissonJensenReport poisson_jensen_residual(const ScalarField& u, const JensenMeasure& mu,
                                                   const PoissonJensenOptions& opt = {}) {
    auto violations = check_subharmonic(u, opt.sbh);
    if (!violations.empty())
        throw PreconditionError("poisson_jensen_residual: u is not subharmonic",
                                std::move(violations));
    if (u.marker_distance(mu.x0) < 2 * u.dom().h())
        throw PreconditionError("poisson_jensen_residual: u(x0) = -infinity");

    PoissonJensenReport rep;
    rep.u_at_x0 = u.interpolate_or_throw(mu.x0, "u");
    auto nu = riesz_measure(u);
    LogPotential V(mu);

    long charged_cells = 0;
    for (double m : nu.cell_mass()) charged_cells += m != 0.0;
    if (charged_cells > opt.materialize_threshold) {
        ScalarField Vf = V.field();
        double total = 0.0;
        for (const auto& a : nu.atoms()) total += a.mass * Vf.interpolate_or_throw(a.where);
        const auto& cm = nu.cell_mass();
        for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx)
            if (cm[idx] != 0.0 && Vf.defined(idx)) total += cm[idx] * Vf[idx];
        rep.potential_integral = total;
    } else {
        rep.potential_integral = integrate_potential(V, nu);
    }
    rep.measure_integral = integrate_field(u, mu.measure);
    rep.residual = std::abs(rep.u_at_x0 + rep.potential_integral - rep.measure_integral);
    return rep;
}

/// Total-variation distance of two boundary-concentrated measures after
/// binning by angle about `center`. Bin counts follow the resolution: a
/// bin must span a couple dozen cells of the collar circle.
inline double angular_tv_distance(const RieszCharge& a, const RieszCharge& b, Point center,
                                  double ring_radius, int bins = 0) {
    const double h = a.grid()->h();
    if (bins <= 0) {
        bins = std::clamp(static_cast<int>(2 * std::numbers::pi * ring_radius / (32 * h)), 8, 64);
    }
    std::vector<double> wa(bins, 0.0), wb(bins, 0.0);
    auto bin_of = [&](Point z) {
        double th = std::arg(z - center);
        int q = static_cast<int>(std::floor((th + std::numbers::pi) /
                                            (2 * std::numbers::pi) * bins));
        return std::min(bins - 1, std::max(0, q));
    };
    auto accumulate = [&](const RieszCharge& c, std::vector<double>& w) {
        for (const auto& at : c.atoms()) w[bin_of(at.where)] += at.mass;
        const auto& cm = c.cell_mass();
        for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx)
            if (cm[idx] != 0.0) w[bin_of(c.grid()->pos(static_cast<int>(idx)))] += cm[idx];
    };
    accumulate(a, wa);
    accumulate(b, wb);
    double tv = 0.0;
    for (int q = 0; q < bins; ++q) tv += std::abs(wa[q] - wb[q]);
    return tv / 2;
}

}  // namespace potlab
