#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "potlab/fields.hpp"
#include "potlab/green.hpp"

namespace potlab {

/// Slope fit of V against -log r on the dyadic circles r = 8h, 16h, 32h
/// about x0, Richardson-extrapolated to kill the r^2 term of the regular
/// part. For V = c * (-log|x - x0|) + smooth this recovers c to ~1%.
struct NormalizationEstimate {
    double ratio = 0.0;
    double slope_inner = 0.0, slope_outer = 0.0;
};

inline NormalizationEstimate estimate_log_normalization(const ScalarField& V, Point x0) {
    const double h = V.dom().h();
    const double a8 = sphere_average(V, x0, 8 * h);
    const double a16 = sphere_average(V, x0, 16 * h);
    const double a32 = sphere_average(V, x0, 32 * h);
    NormalizationEstimate e;
    e.slope_inner = (a8 - a16) / std::log(2.0);
    e.slope_outer = (a16 - a32) / std::log(2.0);
    e.ratio = (4.0 * e.slope_inner - e.slope_outer) / 3.0;
    return e;
}

struct ClassifyOptions {
    /// Clause (iv): the outermost collar max must not exceed this many
    /// spacings.
    double decay_tol_cells = 10.0;
    double nonneg_tol = 1e-9;
    SubharmonicOptions sbh{};
};

struct ClassifyReport {
    bool nonnegative = false;
    bool subharmonic = false;
    bool bounded = false;
    bool decays = false;
    double min_value = 0.0, max_value = 0.0;
    std::vector<double> collar_maxima;  // outermost first
    std::vector<int> sbh_violations;

    bool member() const { return nonnegative && subharmonic && bounded && decays; }
    std::string failing_clause() const {
        if (!nonnegative) return "i: negativity";
        if (!subharmonic) return "ii: subharmonicity";
        if (!bounded) return "iii: bound";
        if (!decays) return "iv: boundary decay";
        return "none";
    }
};

/// Membership test for sbh_0^+(D \ S; <= b): nonnegative, subharmonic on
/// D \ S, bounded by b, collar maxima decaying to 0 at the boundary.
inline ClassifyReport classify_test(const ScalarField& v, const ClosedBallUnion& S, double b,
                                    const ClassifyOptions& opt = {}) {
    const GridDomain& g = v.dom();
    ClassifyReport rep;
    auto off_S = [&](Point z) { return !S.contains(z); };
    ScalarField v_off = S.empty() ? v : v.restricted(off_S);

    rep.min_value = kPosInf;
    rep.max_value = kNegInf;
    for (long idx = 0; idx < g.size(); ++idx) {
        if (!g.interior(static_cast<int>(idx)) || !v_off.defined(idx)) continue;
        if (v_off.marker_at(idx)) continue;
        rep.min_value = std::min(rep.min_value, v_off[idx]);
        rep.max_value = std::max(rep.max_value, v_off[idx]);
    }
    rep.nonnegative = rep.min_value >= -opt.nonneg_tol;
    rep.bounded = rep.max_value <= b + 1e-9 * std::max(1.0, std::abs(b));

    rep.sbh_violations = check_subharmonic(v_off, opt.sbh);
    rep.subharmonic = rep.sbh_violations.empty();

    const int rings = std::min(4, g.max_depth());
    for (int k = 0; k < rings; ++k) {
        double m = kNegInf;
        for (int idx : g.collar(k))
            if (v_off.defined(idx) && !v_off.marker_at(idx)) m = std::max(m, v_off[idx]);
        rep.collar_maxima.push_back(m);
    }
    if (!rep.collar_maxima.empty() && std::isfinite(rep.collar_maxima.front())) {
        double outer = rep.collar_maxima.front();
        rep.decays = outer <= opt.decay_tol_cells * g.h();
        // Maxima should not grow toward the boundary.
        if (rep.collar_maxima.size() >= 3)
            rep.decays = rep.decays && outer <= rep.collar_maxima[2] + 1e-9;
    }
    return rep;
}

/// A member of sbh_0^+(D \ S; <= b): the grid field, its bound, the decay
/// profile, and (for closed-form families) an exact pointwise evaluator.
struct TestFunction {
    ScalarField field;
    double bound = 0.0;
    std::vector<double> collar_maxima;
    std::function<double(Point)> exact;  // optional

    double value_at(Point z) const {
        if (exact) return exact(z);
        return field.interpolate_or_throw(z, "test function");
    }
};

/// Wraps and validates a field as a test function; throws with the
/// failing clause otherwise.
inline TestFunction make_test_function(const ScalarField& v, const ClosedBallUnion& S, double b,
                                       std::function<double(Point)> exact = nullptr,
                                       const ClassifyOptions& opt = {}) {
    auto rep = classify_test(v, S, b, opt);
    if (!rep.member())
        throw PreconditionError("test function fails clause " + rep.failing_clause(),
                                rep.sbh_violations);
    TestFunction tf;
    tf.field = S.empty() ? v : v.restricted([&](Point z) { return !S.contains(z); });
    tf.bound = b;
    tf.collar_maxima = rep.collar_maxima;
    tf.exact = std::move(exact);
    return tf;
}

/// scale * extended Green function of a model subdomain, restricted off
/// S: the library's stock family of test functions. Disk models carry an
/// exact evaluator.
inline TestFunction green_test_function(GridPtr grid, const ModelDomain& model, Point pole,
                                        double scale, const ClosedBallUnion& S) {
    auto ghat = extend_green(green_function(grid, model, pole), model);
    ScalarField scaled = ghat.scaled(scale);
    double b = scaled.max_over([&](int idx) {
        return grid->interior(idx) && !S.contains(grid->pos(idx));
    });
    std::function<double(Point)> exact;
    if (model.kind == ModelDomain::Kind::Disk) {
        Point c = model.center;
        double R = model.radius;
        exact = [c, R, pole, scale](Point z) {
            if (std::abs(z - c) >= R) return 0.0;
            return scale * std::max(0.0, green_disk(z, pole, c, R));
        };
    }
    return make_test_function(scaled, S, b, std::move(exact));
}

/// Gluing: max{v, v0} on O, v0 on O0 \ O, where O/O0 are the defined
/// masks of the inputs. Requires O inside O0 and the collar-limsup
/// compatibility (checked over 2 rings); rejects with witness cells.
inline ScalarField glue(const ScalarField& v, const ScalarField& v0, double compat_tol = 1e-12) {
    ScalarField::require_same_grid(v, v0);
    const GridDomain& g = v.dom();

    std::vector<int> witnesses;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            long idx = g.index(i, j);
            if (v.defined(idx) && !v0.defined(idx))
                throw PreconditionError("glue: O must lie inside O0");
            if (v.defined(idx) || !v0.defined(idx)) continue;
            // x in O0 \ O: limsup of v from O over a 2-ring neighborhood.
            double lim = kNegInf;
            for (int dj = -2; dj <= 2; ++dj)
                for (int di = -2; di <= 2; ++di) {
                    if (!g.in_bounds(i + di, j + dj)) continue;
                    long n = g.index(i + di, j + dj);
                    if (v.defined(n) && !v.marker_at(n)) lim = std::max(lim, v[n]);
                }
            if (lim > v0[idx] + compat_tol) witnesses.push_back(static_cast<int>(idx));
        }
    if (!witnesses.empty())
        throw PreconditionError("glue: boundary compatibility violated", std::move(witnesses));

    ScalarField out = v0;
    for (long idx = 0; idx < g.size(); ++idx)
        if (v.defined(idx) && v0.defined(idx)) out[idx] = std::max(v[idx], v0[idx]);
    for (const auto& m : v.markers())
        if (!out.marker_at(m.cell)) out.add_marker(m);
    return out;
}

/// Infimum of the extended Green field over the boundary circles of S.
/// Disk models are sampled through the closed form; other models through
/// grid interpolation.
inline double inf_green_on_boundary(const ScalarField& ghat, const ModelDomain& model,
                                    Point pole, const ClosedBallUnion& S, int samples = 8192) {
    double inf = kPosInf;
    for (const auto& ball : S.balls) {
        for (int k = 0; k < samples; ++k) {
            double th = 2.0 * std::numbers::pi * k / samples;
            Point z = ball.center + std::polar(ball.radius, th);
            double val;
            if (model.kind == ModelDomain::Kind::Disk) {
                val = std::abs(z - model.center) >= model.radius
                          ? 0.0
                          : std::max(0.0, green_disk(z, pole, model.center, model.radius));
            } else {
                val = std::max(0.0, ghat.interpolate_or_throw(z, "extended green"));
            }
            inf = std::min(inf, val);
        }
    }
    return inf;
}

struct ExtendTestResult {
    ScalarField v_tilde;
    double c_tilde = 0.0;
    // Discrete checks of the construction's three postconditions.
    double harmonicity_residual = 0.0;  // on Int S off the pole
    double outer_collar_max = 0.0;
    NormalizationEstimate normalization;
};

/// Builds the extension V~ of a test function v across S: the extended
/// Green function of D~ on S, max{g, c v} on D~ \ S, c v outside D~, 0
/// off D; c = inf_{dS} g / b.
inline ExtendTestResult extend_test(const TestFunction& v, const ClosedBallUnion& S, Point x0,
                                    const ModelDomain& dtilde, double b) {
    if (!(b > 0)) throw PreconditionError("extend_test: b must be positive");
    if (!S.contains(x0)) throw PreconditionError("extend_test: x0 must lie in Int S");
    GridPtr grid = v.field.grid();
    const GridDomain& g = *grid;
    for (const auto& ball : S.balls)
        if (!dtilde.contains(ball.center) ||
            dtilde.boundary_distance(ball.center) < ball.radius + 2 * g.h())
            throw PreconditionError("extend_test: S must lie strictly inside Dtilde");

    auto ghat = extend_green(green_function(grid, dtilde, x0), dtilde);
    const double inf_g = inf_green_on_boundary(ghat, dtilde, x0, S);
    if (!(inf_g > 1e-12))
        throw PreconditionError("extend_test: degenerate placement, inf of green on dS is 0");
    const double c = inf_g / b;

    ExtendTestResult res;
    res.c_tilde = c;
    ScalarField out(grid, 0.0);
    for (long idx = 0; idx < g.size(); ++idx) {
        Point z = g.pos(static_cast<int>(idx));
        double vv = v.field.defined(idx) && !v.field.marker_at(idx) ? v.field[idx] : 0.0;
        if (!g.interior(static_cast<int>(idx))) {
            out[idx] = 0.0;  // off D
        } else if (S.contains(z)) {
            out[idx] = ghat[idx];
        } else if (dtilde.contains(z)) {
            out[idx] = std::max(ghat[idx], c * vv);
        } else {
            out[idx] = c * vv;
        }
    }
    for (const auto& m : ghat.markers()) out.add_marker(m);
    res.v_tilde = std::move(out);

    // Postconditions: harmonic on Int S off the pole, boundary decay,
    // unit logarithmic normalization at the pole.
    const double skip = 16.0 * g.h();
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            Point z = g.pos(i, j);
            if (!S.contains(z) || std::abs(z - x0) < skip) continue;
            bool inner = S.contains(g.pos(i - 1, j)) && S.contains(g.pos(i + 1, j)) &&
                         S.contains(g.pos(i, j - 1)) && S.contains(g.pos(i, j + 1));
            if (!inner) continue;
            const ScalarField& V = res.v_tilde;
            double avg = 0.25 * (V.at(i - 1, j) + V.at(i + 1, j) + V.at(i, j - 1) +
                                 V.at(i, j + 1));
            res.harmonicity_residual =
                std::max(res.harmonicity_residual, std::abs(V.at(i, j) - avg));
        }
    double outer = kNegInf;
    for (int idx : g.collar(0))
        if (!res.v_tilde.marker_at(idx)) outer = std::max(outer, res.v_tilde[idx]);
    res.outer_collar_max = outer;
    res.normalization = estimate_log_normalization(res.v_tilde, x0);
    return res;
}

/// V_n = max{0, V~ - 1/n}: compactly supported truncations increasing
/// back to V~.
inline ScalarField truncate_sequence(const ScalarField& v_tilde, int n) {
    if (n < 1) throw PreconditionError("truncate_sequence: n >= 1");
    ScalarField out = v_tilde;
    const double cut = 1.0 / n;
    for (long idx = 0; idx < v_tilde.dom().size(); ++idx)
        if (out.defined(idx) && !out.marker_at(idx))
            out[idx] = std::max(0.0, out[idx] - cut);
    return out;
}

struct PotentialCheckOptions {
    /// Sampling dips of atomized measures reach ~w_max log h; nonneg and
    /// subharmonicity are checked with these slacks.
    double nonneg_tol = 0.03;
    double sbh_tol = 1e-3;
    double support_tol = 1e-3;
    double ratio_tol = 0.02;
};

struct PotentialReport {
    bool nonnegative = false;
    bool subharmonic = false;
    bool compact_support = false;
    bool normalized = false;
    double min_value = 0.0;
    double support_collar_max = 0.0;
    NormalizationEstimate normalization;
    std::vector<int> sbh_violations;

    bool pass() const { return nonnegative && subharmonic && compact_support && normalized; }
    std::string failing_clause() const {
        if (!nonnegative) return "nonnegativity";
        if (!subharmonic) return "subharmonicity off the pole";
        if (!compact_support) return "compact support inside D";
        if (!normalized) return "pole seminormalization";
        return "none";
    }
};

/// Jensen-potential membership: nonnegative, subharmonic off the pole,
/// vanishing outside a compact subset avoiding the outer collars, and
/// logarithmic normalization ratio at most 1.
inline PotentialReport is_jensen_potential(const ScalarField& V, Point x0,
                                           const PotentialCheckOptions& opt = {}) {
    const GridDomain& g = V.dom();
    PotentialReport rep;

    rep.min_value = kPosInf;
    for (long idx = 0; idx < g.size(); ++idx)
        if (V.defined(idx) && !V.marker_at(idx))
            rep.min_value = std::min(rep.min_value, V[idx]);
    rep.nonnegative = rep.min_value >= -opt.nonneg_tol;

    SubharmonicOptions sopt;
    sopt.tolerance = std::max(opt.sbh_tol, 0.5 * g.h() * g.h());
    rep.sbh_violations = check_subharmonic(V, sopt);
    rep.subharmonic = rep.sbh_violations.empty();

    double outer = 0.0;
    for (int k = 0; k < std::min(2, g.max_depth()); ++k)
        for (int idx : g.collar(k))
            if (V.defined(idx) && !V.marker_at(idx)) outer = std::max(outer, V[idx]);
    rep.support_collar_max = outer;
    rep.compact_support = outer <= opt.support_tol;

    rep.normalization = estimate_log_normalization(V, x0);
    rep.normalized = rep.normalization.ratio <= 1.0 + opt.ratio_tol;
    return rep;
}

struct MinorantOptions {
    double tolerance = 1e-12;
    long max_sweeps = 1'000'000;
    double omega = 0.0;  // 0 = auto
};

struct MinorantResult {
    ScalarField gm;
    SolveStats stats;
    bool clipped_below = false;  // w hit the value floor somewhere
};

namespace detail {

/// Shortley-Weller arm length (in units of h) from an interior node
/// toward an exterior neighbor: the parameter t in (0, 1] at which the
/// segment to the neighbor crosses the true domain boundary.
inline double boundary_arm(const GridDomain& g, Point from, Point dir) {
    auto inside = [&](double t) {
        Point z = from + t * dir;
        switch (g.shape()) {
            case GridDomain::Shape::Disk: {
                Point c{(g.box().x0 + g.box().x1) / 2, (g.box().y0 + g.box().y1) / 2};
                return std::abs(z - c) < (g.box().x1 - g.box().x0) / 2;
            }
            case GridDomain::Shape::Annulus: {
                Point c{(g.box().x0 + g.box().x1) / 2, (g.box().y0 + g.box().y1) / 2};
                double R = (g.box().x1 - g.box().x0) / 2;
                double d = std::abs(z - c);
                return d < R && d > 0;  // outer circle only; inner handled as S
            }
            case GridDomain::Shape::Rectangle:
                return g.box().contains(z);
            case GridDomain::Shape::Custom:
                return false;
        }
        return false;
    };
    if (g.shape() == GridDomain::Shape::Custom) return 1.0;
    // Bisection for the crossing; the from-node is inside.
    double lo = 0.0, hi = 1.0;
    if (inside(1.0)) return 1.0;
    for (int it = 0; it < 40; ++it) {
        double mid = (lo + hi) / 2;
        (inside(mid) ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace detail

/// Greatest minorant of w within the cone of subharmonic functions on
/// D \ S with boundary limit 0: projected SOR on v <- min(w, harmonic
/// average), zero held on the true outer boundary via Shortley-Weller
/// arms, free (v = w) on the ring touching S. Starts from min(w, H) with
/// H the harmonic extension of the contact data, so an input already in
/// the cone is an immediate fixed point.
inline MinorantResult greatest_minorant(const ScalarField& w, const ClosedBallUnion& S,
                                        const MinorantOptions& opt = {}) {
    GridPtr grid = w.grid();
    const GridDomain& g = *grid;
    const int nx = g.nx();

    enum : uint8_t { kOutside = 0, kZeroRing = 1, kContact = 2, kFree = 3 };
    std::vector<uint8_t> role(g.size(), kOutside);
    std::vector<double> obstacle(g.size(), 0.0);
    bool clipped = false;
    auto in_S = [&](int idx) { return S.contains(g.pos(idx)); };

    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            int idx = g.index(i, j);
            if (!g.interior(i, j) || in_S(idx)) continue;
            if (!w.defined(idx))
                throw PreconditionError("greatest_minorant: w undefined on D \\ S");
            double wv = w[idx];
            if (wv < -ScalarField::kValueFloor) {
                wv = -ScalarField::kValueFloor;
                clipped = true;
            }
            obstacle[idx] = wv;
            bool touches_S = (g.interior(i - 1, j) && in_S(g.index(i - 1, j))) ||
                             (g.interior(i + 1, j) && in_S(g.index(i + 1, j))) ||
                             (g.interior(i, j - 1) && in_S(g.index(i, j - 1))) ||
                             (g.interior(i, j + 1) && in_S(g.index(i, j + 1)));
            role[idx] = touches_S ? kContact : kFree;
        }

    // Precompute Shortley-Weller weights for cells with exterior arms.
    struct Stencil {
        double cE, cW, cN, cS, denom;
    };
    std::vector<Stencil> sten(g.size());
    std::vector<int> relax[2];
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            int idx = g.index(i, j);
            if (role[idx] != kFree) continue;
            double aE = 1, aW = 1, aN = 1, aS = 1;
            Point z = g.pos(i, j);
            const double h = g.h();
            if (!g.interior(i + 1, j)) aE = detail::boundary_arm(g, z, {h, 0});
            if (!g.interior(i - 1, j)) aW = detail::boundary_arm(g, z, {-h, 0});
            if (!g.interior(i, j + 1)) aN = detail::boundary_arm(g, z, {0, h});
            if (!g.interior(i, j - 1)) aS = detail::boundary_arm(g, z, {0, -h});
            // Short arms only strengthen the diagonal: the nearer the
            // true boundary, the harder the zero pins the cell.
            Stencil s;
            s.cE = 1.0 / (aE * (aE + aW));
            s.cW = 1.0 / (aW * (aE + aW));
            s.cN = 1.0 / (aN * (aN + aS));
            s.cS = 1.0 / (aS * (aN + aS));
            s.denom = s.cE + s.cW + s.cN + s.cS;
            sten[idx] = s;
            relax[(i + j) & 1].push_back(idx);
        }
    if (relax[0].empty() && relax[1].empty())
        throw PreconditionError("greatest_minorant: no cells to relax");

    ScalarField v(grid, 0.0);
    for (long idx = 0; idx < g.size(); ++idx)
        if (role[idx] == kContact) v[idx] = obstacle[idx];

    SolveStats stats;
    stats.omega = opt.omega > 0 ? opt.omega : detail::auto_omega(g);

    auto target_of = [&](int idx) {
        const Stencil& s = sten[idx];
        return (s.cE * v[idx + 1] + s.cW * v[idx - 1] + s.cN * v[idx + nx] +
                s.cS * v[idx - nx]) /
               s.denom;
    };

    // Harmonic init (no obstacle), then projected SOR against it.
    for (long sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        double step = 0.0;
        for (int color = 0; color < 2; ++color)
            for (int idx : relax[color]) {
                double delta = stats.omega * (target_of(idx) - v[idx]);
                v[idx] += delta;
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
        throw ConvergenceError("greatest_minorant: init solve did not converge", stats.sweeps,
                               stats.final_step);
    for (int color = 0; color < 2; ++color)
        for (int idx : relax[color]) v[idx] = std::min(v[idx], obstacle[idx]);

    SolveStats main_stats;
    main_stats.omega = stats.omega;
    for (long sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        double step = 0.0;
        for (int color = 0; color < 2; ++color)
            for (int idx : relax[color]) {
                double next = std::min(obstacle[idx], v[idx] + main_stats.omega *
                                                                  (target_of(idx) - v[idx]));
                step = std::max(step, std::abs(next - v[idx]));
                v[idx] = next;
            }
        main_stats.sweeps = sweep;
        main_stats.final_step = step;
        if (step < opt.tolerance) {
            main_stats.converged = true;
            break;
        }
    }
    if (!main_stats.converged)
        throw ConvergenceError("greatest_minorant: sweep cap reached", main_stats.sweeps,
                               main_stats.final_step);
    main_stats.sweeps += stats.sweeps;

    // Values exist on D \ S (0 elsewhere for convenience); S stays
    // undefined.
    for (long idx = 0; idx < g.size(); ++idx) v.set_defined(idx, role[idx] != kOutside);
    MinorantResult res;
    res.gm = std::move(v);
    res.stats = main_stats;
    res.clipped_below = clipped;
    return res;
}

}  // namespace potlab
