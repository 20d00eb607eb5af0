#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "potlab/green.hpp"
#include "potlab/jensen.hpp"
#include "potlab/testfn.hpp"
#include "potlab/zeros.hpp"

namespace potlab {

/// Outcome of one inequality check: both sides, the margin, the
/// constants in play, a per-integral breakdown and the numeric knobs
/// used. A +inf C-bar is reported, not an error.
struct InequalityReport {
    std::string name;
    std::string check;
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs - lhs
    double C = 0.0;
    double c_tilde = 0.0;
    double cbar = 0.0;  // possibly +inf
    std::map<std::string, double> components;
    std::map<std::string, double> diagnostics;
    std::string note;
};

struct CheckerOptions {
    /// Verdict slack: margin >= -tolerance * scale with
    /// scale = max(1, |lhs|, |rhs|). The theorems are exact inequalities;
    /// only discretization is forgiven.
    double tolerance = 1e-3;
    int boundary_samples = 8192;
};

namespace detail {

/// Restriction predicate helpers for the region integrals.
inline double integrate_test_over(const TestFunction& v, const RieszCharge& nu,
                                  const std::function<bool(Point)>& region) {
    double total = 0.0;
    for (const auto& a : nu.atoms())
        if (a.mass != 0.0 && region(a.where)) total += a.mass * v.value_at(a.where);
    const GridDomain& g = *nu.grid();
    const auto& cm = nu.cell_mass();
    for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx)
        if (cm[idx] != 0.0 && region(g.pos(static_cast<int>(idx))))
            total += cm[idx] * v.value_at(g.pos(static_cast<int>(idx)));
    return total;
}

/// g-weighted integral against a charge over dtilde minus the pole cell;
/// disk models evaluate the closed form, others interpolate the field.
inline double integrate_green_over(const ScalarField& ghat, const ModelDomain& dtilde,
                                   Point pole, const RieszCharge& nu,
                                   const std::function<bool(Point)>& region) {
    const GridDomain& g = *nu.grid();
    auto value = [&](Point z) {
        if (dtilde.kind == ModelDomain::Kind::Disk)
            return std::abs(z - dtilde.center) >= dtilde.radius
                       ? 0.0
                       : std::max(0.0, green_disk(z, pole, dtilde.center, dtilde.radius));
        return std::max(0.0, ghat.interpolate_or_throw(z, "extended green"));
    };
    double total = 0.0;
    const double h = g.h();
    for (const auto& a : nu.atoms()) {
        if (a.mass == 0.0 || !region(a.where)) continue;
        if (std::abs(a.where - pole) < h / 2) continue;  // the pole point itself
        total += a.mass * value(a.where);
    }
    const auto& cm = nu.cell_mass();
    for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx) {
        if (cm[idx] == 0.0) continue;
        Point z = g.pos(static_cast<int>(idx));
        if (!region(z) || std::abs(z - pole) < h / 2) continue;
        total += cm[idx] * value(z);
    }
    return total;
}

inline void record_solver(InequalityReport& rep, const std::string& prefix,
                          const SolveStats& st) {
    rep.diagnostics[prefix + "_sweeps"] = static_cast<double>(st.sweeps);
    rep.diagnostics[prefix + "_final_step"] = st.final_step;
}

}  // namespace detail

/// C = b / inf_{dS} g_Dtilde(., x0): the Main Theorem constant. The
/// infimum is sampled on the boundary circles of S (closed form for disk
/// models).
inline double main_constant(GridPtr grid, const ClosedBallUnion& S, Point x0,
                            const ModelDomain& dtilde, double b,
                            const CheckerOptions& opt = {}) {
    if (!(b > 0)) throw PreconditionError("main_constant: b must be positive");
    if (!S.contains(x0)) throw PreconditionError("main_constant: x0 must lie in Int S");
    auto ghat = extend_green(green_function(grid, dtilde, x0), dtilde);
    double inf_g = inf_green_on_boundary(ghat, dtilde, x0, S, opt.boundary_samples);
    if (!(inf_g > 1e-12))
        throw PreconditionError("main_constant: degenerate inf of green over dS");
    return b / inf_g;
}

/// Smallest admissible regular disk around S: the default Dtilde when a
/// scenario does not pin one. Margins of 4h on both inclusions.
inline ModelDomain default_dtilde(GridPtr grid, const ClosedBallUnion& S) {
    if (S.empty()) throw PreconditionError("default_dtilde: S is empty");
    Point c{0.0, 0.0};
    for (const auto& b : S.balls) c += b.center;
    c /= static_cast<double>(S.balls.size());
    double r_s = 0.0;
    for (const auto& b : S.balls) r_s = std::max(r_s, std::abs(b.center - c) + b.radius);
    const double h = grid->h();
    double radius = r_s + 4 * h;
    return ModelDomain::disk(c, radius);
}

/// C-bar = int_{Dtilde \ x0} g d(nu_M) + int_{Dtilde \ S} g d(nu_M^-)
///        + M^+(x0); +inf when the shell test detects divergence at x0.
inline double cbar_constant(GridPtr grid, Point x0, const ClosedBallUnion& S,
                            const ModelDomain& dtilde, const MajorantSpec& M,
                            InequalityReport* rep = nullptr) {
    if (!grid->interior(grid->index(grid->nearest_node(x0).first, grid->nearest_node(x0).second)))
        throw PreconditionError("cbar_constant: x0 outside the domain");
    if (M.u1.marker_distance(x0) < 2 * grid->h() || M.u2.marker_distance(x0) < 2 * grid->h())
        throw PreconditionError("cbar_constant: M(x0) undefined (singular at x0)");

    // Divergence of the pole integrals at x0: the dom-M shell test.
    auto [pos, neg] = hahn_jordan(M.charge);
    if (!dom_check(M.charge, x0, 0.25, Dimension(2)).convergent) {
        if (rep) rep->note = "cbar divergent: dom-M shell test failed at x0";
        return kPosInf;
    }

    auto ghat = extend_green(green_function(grid, dtilde, x0), dtilde);
    auto in_dtilde = [&](Point z) { return dtilde.contains(z); };
    auto in_dtilde_off_S = [&](Point z) { return dtilde.contains(z) && !S.contains(z); };
    double g_m = detail::integrate_green_over(ghat, dtilde, x0, M.charge, in_dtilde);
    double g_neg = detail::integrate_green_over(ghat, dtilde, x0, neg, in_dtilde_off_S);
    double m_plus = std::max(0.0, M.value_at(x0));
    if (rep) {
        rep->components["cbar_green_vs_nuM"] = g_m;
        rep->components["cbar_green_vs_nuM_neg"] = g_neg;
        rep->components["cbar_M_plus_x0"] = m_plus;
    }
    return g_m + g_neg + m_plus;
}

/// The Main Theorem inequality:
///   C u(x0) + int_{D\S} v d(nu_u)
///     <= int_{D\S} v d(nu_M) + int_{Dtilde\S} v d(nu_M^-) + C Cbar_M.
inline InequalityReport verify_main(GridPtr grid, const ScalarField& u, const MajorantSpec& M,
                                    const TestFunction& v, const ClosedBallUnion& S, Point x0,
                                    const ModelDomain& dtilde, double b,
                                    const CheckerOptions& opt = {}) {
    InequalityReport rep;
    rep.check = "main";
    const GridDomain& g = *grid;

    // u <= M on D, witnessed cellwise.
    std::vector<int> witnesses;
    for (long idx = 0; idx < g.size(); ++idx) {
        if (!g.interior(static_cast<int>(idx))) continue;
        if (!u.defined(idx) || u.marker_at(idx)) continue;
        if (!M.u1.defined(idx) || !M.u2.defined(idx)) continue;
        if (M.u1.marker_at(idx) || M.u2.marker_at(idx)) continue;
        double m = M.u1[idx] - M.u2[idx];
        if (u[idx] > m + 1e-9 * std::max(1.0, std::abs(m)))
            witnesses.push_back(static_cast<int>(idx));
    }
    if (!witnesses.empty())
        throw PreconditionError("verify_main: u <= M fails", std::move(witnesses));
    auto sbh_bad = check_subharmonic(u);
    if (!sbh_bad.empty())
        throw PreconditionError("verify_main: u not subharmonic", std::move(sbh_bad));
    if (u.marker_distance(x0) < 2 * g.h())
        throw PreconditionError("verify_main: u(x0) = -infinity");

    rep.C = main_constant(grid, S, x0, dtilde, b, opt);
    rep.c_tilde = 1.0 / rep.C;
    rep.cbar = cbar_constant(grid, x0, S, dtilde, M, &rep);

    auto nu_u = riesz_measure(u);
    auto [nu_pos, nu_neg] = hahn_jordan(M.charge);
    auto off_S_in_D = [&](Point z) {
        auto [i, j] = g.nearest_node(z);
        return g.interior(i, j) && !S.contains(z);
    };
    auto off_S_in_dtilde = [&](Point z) { return dtilde.contains(z) && !S.contains(z); };

    double u_x0 = u.interpolate_or_throw(x0, "u");
    double int_v_nuu = detail::integrate_test_over(v, nu_u, off_S_in_D);
    double int_v_nuM = detail::integrate_test_over(v, M.charge, off_S_in_D);
    double int_v_neg = detail::integrate_test_over(v, nu_neg, off_S_in_dtilde);

    rep.lhs = rep.C * u_x0 + int_v_nuu;
    rep.rhs = int_v_nuM + int_v_neg + rep.C * rep.cbar;
    rep.margin = rep.rhs - rep.lhs;
    rep.components["u_x0"] = u_x0;
    rep.components["int_v_nu_u"] = int_v_nuu;
    rep.components["int_v_nu_M"] = int_v_nuM;
    rep.components["int_v_nu_M_neg"] = int_v_neg;
    rep.diagnostics["h"] = g.h();
    rep.diagnostics["tolerance"] = opt.tolerance;
    double scale = std::max({1.0, std::abs(rep.lhs), std::abs(rep.rhs)});
    rep.diagnostics["scale"] = scale;
    rep.pass = std::isinf(rep.rhs) || rep.margin >= -opt.tolerance * scale;
    return rep;
}

/// Theorem-style uniform bound for holomorphic f with |f| <= exp M:
///   int_{D\S} v Zero_f <= int_{D\S} v d(nu_M) - C log|f(z0)| + C Cbar,
/// with Cbar = int_{Dtilde} g d(nu_M) + M^+(z0) (subharmonic M).
inline InequalityReport verify_uniform(GridPtr grid, const HoloFunction& f,
                                       const MajorantSpec& M, const TestFunction& v,
                                       const ClosedBallUnion& S, Point z0, double b,
                                       std::optional<ModelDomain> dtilde_opt = {},
                                       const CheckerOptions& opt = {}) {
    InequalityReport rep;
    rep.check = "uniform";
    const GridDomain& g = *grid;

    auto [pos, neg] = hahn_jordan(M.charge);
    if (neg.total_variation() > 0.01)
        throw PreconditionError("verify_uniform: M must be subharmonic (nu_M^- = 0)");

    double log_f_z0 = f.log_abs(z0);
    if (!std::isfinite(log_f_z0) || log_f_z0 == -kPosInf)
        throw PreconditionError("verify_uniform: f(z0) = 0");

    // |f| <= exp M on the domain, witnessed cellwise off the root cells.
    auto logf = f.log_modulus_field(grid);
    std::vector<int> witnesses;
    for (long idx = 0; idx < g.size(); ++idx) {
        if (!g.interior(static_cast<int>(idx))) continue;
        if (!logf.defined(idx) || logf.marker_at(idx)) continue;
        if (!M.u1.defined(idx) || !M.u2.defined(idx)) continue;
        if (M.u1.marker_at(idx) || M.u2.marker_at(idx)) continue;
        double m = M.u1[idx] - M.u2[idx];
        if (logf[idx] > m + 1e-9 * std::max(1.0, std::abs(m)))
            witnesses.push_back(static_cast<int>(idx));
    }
    if (!witnesses.empty())
        throw PreconditionError("verify_uniform: |f| <= exp M fails", std::move(witnesses));

    ModelDomain dtilde = dtilde_opt ? *dtilde_opt : default_dtilde(grid, S);
    rep.C = main_constant(grid, S, z0, dtilde, b, opt);
    rep.cbar = cbar_constant(grid, z0, S, dtilde, M, &rep);

    auto off_S_in_D = [&](Point z) {
        auto [i, j] = g.nearest_node(z);
        return g.interior(i, j) && !S.contains(z);
    };
    double int_v_nuM = detail::integrate_test_over(v, M.charge, off_S_in_D);

    rep.lhs = weighted_zero_sum(f.divisor(), v, S);
    rep.rhs = int_v_nuM - rep.C * log_f_z0 + rep.C * rep.cbar;
    rep.margin = rep.rhs - rep.lhs;
    rep.components["zero_sum"] = rep.lhs;
    rep.components["int_v_nu_M"] = int_v_nuM;
    rep.components["log_f_z0"] = log_f_z0;
    rep.diagnostics["h"] = g.h();
    rep.diagnostics["tolerance"] = opt.tolerance;
    double scale = std::max({1.0, std::abs(rep.lhs), std::abs(rep.rhs)});
    rep.diagnostics["scale"] = scale;
    rep.pass = std::isinf(rep.rhs) || rep.margin >= -opt.tolerance * scale;
    return rep;
}

/// Sweep of test functions at the fixed constants: the uniformity claim.
inline std::vector<InequalityReport> verify_uniform_sweep(
    GridPtr grid, const HoloFunction& f, const MajorantSpec& M,
    const std::vector<TestFunction>& family, const ClosedBallUnion& S, Point z0, double b,
    std::optional<ModelDomain> dtilde_opt = {}, const CheckerOptions& opt = {}) {
    std::vector<InequalityReport> out;
    out.reserve(family.size());
    for (const auto& v : family) out.push_back(verify_uniform(grid, f, M, v, S, z0, b,
                                                              dtilde_opt, opt));
    return out;
}

struct ExhaustionReport {
    std::vector<double> partial_sums;  // over S_k \ S_1, increasing k
    double budget = 0.0;               // uniform-theorem bound at S_1
    bool nondecreasing = false;
    bool bounded = false;
    InequalityReport inner;

    bool pass() const { return nondecreasing && bounded && inner.pass; }
};

/// Individual finiteness along an exhaustion: the zero sums over
/// S_k \ S_1 grow monotonically and stay within the uniform budget at
/// the innermost S_1. Requires v <= w on the nu_M support near the
/// boundary.
inline ExhaustionReport verify_individual_1(GridPtr grid, const HoloFunction& f,
                                            const MajorantSpec& M, const ScalarField& w,
                                            const TestFunction& v,
                                            const std::vector<ClosedBallUnion>& exhaustion,
                                            double b, const CheckerOptions& opt = {}) {
    if (exhaustion.empty())
        throw PreconditionError("verify_individual_1: empty exhaustion");
    const ClosedBallUnion& S1 = exhaustion.front();
    const GridDomain& g = *grid;

    // v <= w on supp nu_M outside S1.
    std::vector<int> witnesses;
    const auto& cm = M.charge.cell_mass();
    for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx) {
        if (cm[idx] == 0.0) continue;
        Point z = g.pos(static_cast<int>(idx));
        if (S1.contains(z) || !w.defined(idx)) continue;
        if (v.value_at(z) > w[idx] + 1e-9)
            witnesses.push_back(static_cast<int>(idx));
    }
    if (!witnesses.empty())
        throw PreconditionError("verify_individual_1: v <= w fails on supp nu_M",
                                std::move(witnesses));

    ExhaustionReport rep;
    Point z0 = S1.balls.front().center;
    rep.inner = verify_uniform(grid, f, M, v, S1, z0, b, {}, opt);
    rep.budget = rep.inner.rhs;

    for (const auto& Sk : exhaustion) {
        double sum = 0.0;
        for (const auto& e : f.divisor().entries) {
            if (S1.contains(e.where) || !Sk.contains(e.where)) continue;
            sum += e.multiplicity * v.value_at(e.where);
        }
        rep.partial_sums.push_back(sum);
    }
    rep.nondecreasing = true;
    for (size_t k = 1; k < rep.partial_sums.size(); ++k)
        rep.nondecreasing &= rep.partial_sums[k] >= rep.partial_sums[k - 1] - 1e-12;
    rep.bounded = true;
    for (double s : rep.partial_sums) rep.bounded &= s <= rep.budget + 1e-9;
    return rep;
}

struct MinorantRouteReport {
    ClassifyReport classification;
    std::string key_path;  // "i" or "ii"
    bool classified = false;
    MinorantResult minorant;
    InequalityReport uniform;

    bool pass() const { return classified && uniform.pass; }
};

/// Individual theorem through the greatest minorant: gm*w is classified
/// as a test function (under key condition (i) boundary decay of w, or
/// (ii) regularity of D) and routed through the uniform check.
inline MinorantRouteReport verify_individual_2(GridPtr grid, const HoloFunction& f,
                                               const MajorantSpec& M, const ScalarField& w,
                                               const ClosedBallUnion& S, Point z0,
                                               const std::string& key_path,
                                               const CheckerOptions& opt = {}) {
    MinorantRouteReport rep;
    rep.key_path = key_path;
    rep.minorant = greatest_minorant(w, S);

    // b of Eq.-style boundary data: sup over the contact ring of w.
    const GridDomain& g = *grid;
    double b_contact = 0.0;
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            if (!g.interior(i, j) || S.contains(g.pos(i, j))) continue;
            bool touches = S.contains(g.pos(i - 1, j)) || S.contains(g.pos(i + 1, j)) ||
                           S.contains(g.pos(i, j - 1)) || S.contains(g.pos(i, j + 1));
            if (touches && w.defined(i, j)) b_contact = std::max(b_contact, w.at(i, j));
        }

    double b_gm = std::max(1e-12, rep.minorant.gm.max_over([&](int idx) {
        return g.interior(idx) && !S.contains(g.pos(idx));
    }));
    rep.classification = classify_test(rep.minorant.gm, S, b_gm);
    rep.classified = rep.classification.member();
    if (!rep.classified) {
        rep.uniform.check = "individual2";
        rep.uniform.note = "gm*w failed classification under key path (" + key_path + ")";
        return rep;
    }
    TestFunction v;
    v.field = rep.minorant.gm.restricted([&](Point z) { return !S.contains(z); });
    v.bound = b_gm;
    auto rep_u = verify_uniform(grid, f, M, v, S, z0, b_gm, {}, opt);
    rep.uniform = rep_u;
    rep.uniform.check = "individual2";
    rep.uniform.diagnostics["b_contact"] = b_contact;
    detail::record_solver(rep.uniform, "minorant", rep.minorant.stats);
    return rep;
}

struct ProofChainStep {
    int n = 0;
    double pj_u = 0.0, pj_u1 = 0.0, pj_u2 = 0.0;  // Poisson-Jensen defects
    double margin = 0.0;                          // combined-inequality margin
    double dirac_coefficient = 0.0;
};

struct ProofChainReport {
    std::vector<ProofChainStep> steps;
    double limit_margin = 0.0;  // with V~ in place of V_n
    bool residuals_ok = false;
    bool margins_nonneg = false;
    bool margins_monotone = false;

    bool pass() const { return residuals_ok && margins_nonneg && margins_monotone; }
};

struct ProofChainOptions {
    double residual_tol = 5e-3;
    double monotone_slack = 1e-3;
    CheckerOptions checker{};
};

/// Replays the proof's ladder: for each n the three Poisson-Jensen
/// identities against mu_n = P^{-1}(V_n), the combined inequality
///   u(x0) + int V_n d(nu_u) + int V_n d(nu_M^-)
///     <= M(x0) + int V_n d(nu_M^+),
/// and the monotone limit with V~.
inline ProofChainReport proof_chain_check(GridPtr grid, const ScalarField& u,
                                          const MajorantSpec& M, const ScalarField& v_tilde,
                                          Point x0, const std::vector<int>& n_list,
                                          const ProofChainOptions& opt = {}) {
    ProofChainReport rep;
    auto nu_u = riesz_measure(u);
    auto nu_u1 = riesz_measure(M.u1);
    auto nu_u2 = riesz_measure(M.u2);
    double u_x0 = u.interpolate_or_throw(x0, "u");
    double M_x0 = M.value_at(x0);
    if (!std::isfinite(M_x0))
        throw PreconditionError("proof_chain_check: x0 outside dom M");

    auto integrate_against = [&](const ScalarField& V, const RieszCharge& nu) {
        double total = 0.0;
        for (const auto& a : nu.atoms())
            if (a.mass != 0.0) total += a.mass * V.interpolate_or_throw(a.where, "potential");
        const auto& cm = nu.cell_mass();
        for (long idx = 0; idx < static_cast<long>(cm.size()); ++idx)
            if (cm[idx] != 0.0 && V.defined(idx) && !V.marker_at(idx))
                total += cm[idx] * V[idx];
        return total;
    };

    for (int n : n_list) {
        ProofChainStep step;
        step.n = n;
        auto Vn = truncate_sequence(v_tilde, n);
        auto dual = duality_inverse(Vn, x0);
        step.dirac_coefficient = dual.dirac_coefficient;

        auto pj = [&](const ScalarField& w, const RieszCharge& nu) {
            double w_x0 = w.interpolate_or_throw(x0, "w");
            return std::abs(w_x0 + integrate_against(Vn, nu) -
                            integrate_field(w, dual.mu.measure));
        };
        step.pj_u = pj(u, nu_u);
        step.pj_u1 = pj(M.u1, nu_u1);
        step.pj_u2 = pj(M.u2, nu_u2);

        auto [nu_pos, nu_neg] = hahn_jordan(M.charge);
        double lhs = u_x0 + integrate_against(Vn, nu_u) + integrate_against(Vn, nu_neg);
        double rhs = M_x0 + integrate_against(Vn, nu_pos);
        step.margin = rhs - lhs;
        rep.steps.push_back(step);
    }

    auto [nu_pos, nu_neg] = hahn_jordan(M.charge);
    double lhs = u_x0 + integrate_against(v_tilde, nu_u) + integrate_against(v_tilde, nu_neg);
    double rhs = M_x0 + integrate_against(v_tilde, nu_pos);
    rep.limit_margin = rhs - lhs;

    rep.residuals_ok = true;
    rep.margins_nonneg = true;
    rep.margins_monotone = true;
    double prev = -kPosInf;
    for (const auto& s : rep.steps) {
        rep.residuals_ok &= s.pj_u <= opt.residual_tol && s.pj_u1 <= opt.residual_tol &&
                            s.pj_u2 <= opt.residual_tol;
        rep.margins_nonneg &= s.margin >= -opt.checker.tolerance;
        rep.margins_monotone &= s.margin >= prev - opt.monotone_slack;
        prev = s.margin;
    }
    rep.margins_monotone &= rep.limit_margin >= prev - opt.monotone_slack;
    return rep;
}

}  // namespace potlab
