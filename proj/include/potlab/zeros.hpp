#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "potlab/fields.hpp"
#include "potlab/testfn.hpp"

namespace potlab {

struct DivisorEntry {
    Point where{0.0, 0.0};
    int multiplicity = 1;
};

/// Finite zero divisor: pairwise distinct points with positive
/// multiplicities. A subdivisor is any entrywise-smaller divisor.
struct ZeroDivisor {
    std::vector<DivisorEntry> entries;

    ZeroDivisor() = default;
    explicit ZeroDivisor(std::vector<DivisorEntry> es) : entries(std::move(es)) {
        for (const auto& e : entries)
            if (e.multiplicity < 1)
                throw PreconditionError("zero divisor: multiplicities must be positive");
        for (size_t i = 0; i < entries.size(); ++i)
            for (size_t j = i + 1; j < entries.size(); ++j)
                if (std::abs(entries[i].where - entries[j].where) < 1e-12)
                    throw PreconditionError("zero divisor: points must be pairwise distinct");
    }

    double min_separation() const {
        double sep = kPosInf;
        for (size_t i = 0; i < entries.size(); ++i)
            for (size_t j = i + 1; j < entries.size(); ++j)
                sep = std::min(sep, std::abs(entries[i].where - entries[j].where));
        return sep;
    }

    int total_multiplicity() const {
        int t = 0;
        for (const auto& e : entries) t += e.multiplicity;
        return t;
    }
};

/// One-variable holomorphic function with an evaluable log-modulus:
/// a polynomial given by its roots, a finite Blaschke product, or
/// exp(harmonic polynomial) times an optional root product.
class HoloFunction {
public:
    enum class Kind { PolynomialRoots, Blaschke, ExpPolyProduct };

    static HoloFunction polynomial(std::vector<DivisorEntry> roots, Point leading = {1.0, 0.0}) {
        if (std::abs(leading) == 0.0)
            throw PreconditionError("holomorphic function: zero leading coefficient");
        HoloFunction f;
        f.kind_ = Kind::PolynomialRoots;
        f.divisor_ = ZeroDivisor(std::move(roots));
        f.leading_ = leading;
        return f;
    }

    /// Product of factors (|a|/a)(a - z)/(1 - conj(a) z); the empty
    /// product is the constant 1. B(0) = prod |a_k|^{m_k} > 0.
    static HoloFunction blaschke(std::vector<DivisorEntry> roots) {
        for (const auto& r : roots)
            if (std::abs(r.where) >= 1.0)
                throw PreconditionError("blaschke product needs roots inside the unit disk");
        HoloFunction f;
        f.kind_ = Kind::Blaschke;
        f.divisor_ = ZeroDivisor(std::move(roots));
        return f;
    }

    /// exp(p(z)) * prod (z - a_k)^{m_k} with p a complex polynomial
    /// (coefficients low-to-high); zero-free when the product is empty.
    static HoloFunction exp_poly(std::vector<Point> coefficients,
                                 std::vector<DivisorEntry> roots = {}) {
        HoloFunction f;
        f.kind_ = Kind::ExpPolyProduct;
        f.coeffs_ = std::move(coefficients);
        f.divisor_ = ZeroDivisor(std::move(roots));
        return f;
    }

    Kind kind() const { return kind_; }
    const ZeroDivisor& divisor() const { return divisor_; }

    /// log|f(z)|; -inf at roots.
    double log_abs(Point z) const {
        double t = 0.0;
        switch (kind_) {
            case Kind::PolynomialRoots:
                t = std::log(std::abs(leading_));
                for (const auto& r : divisor_.entries)
                    t += r.multiplicity * std::log(std::abs(z - r.where));
                return t;
            case Kind::Blaschke:
                for (const auto& r : divisor_.entries)
                    t += r.multiplicity * (std::log(std::abs(r.where - z)) -
                                           std::log(std::abs(1.0 - std::conj(r.where) * z)));
                return t;
            case Kind::ExpPolyProduct: {
                Point p{0.0, 0.0};
                Point zp{1.0, 0.0};
                for (const auto& c : coeffs_) {
                    p += c * zp;
                    zp *= z;
                }
                t = p.real();
                for (const auto& r : divisor_.entries)
                    t += r.multiplicity * std::log(std::abs(z - r.where));
                return t;
            }
        }
        return t;
    }

    /// Sampled log-modulus with a marker at every root.
    ScalarField log_modulus_field(GridPtr grid) const {
        std::vector<Marker> markers;
        for (const auto& r : divisor_.entries) markers.push_back({r.where, -1, -1});
        return ScalarField::sample(
            grid, [this](Point z) { return log_abs(z); }, std::move(markers));
    }

private:
    Kind kind_ = Kind::PolynomialRoots;
    ZeroDivisor divisor_;
    Point leading_{1.0, 0.0};
    std::vector<Point> coeffs_;
};

/// Counting measure of a divisor: one atom per root carrying its
/// multiplicity, no cell density.
inline RieszCharge counting_measure(const ZeroDivisor& d, GridPtr grid) {
    RieszCharge c(std::move(grid));
    for (const auto& e : d.entries) c.add_atom(e.where, e.multiplicity);
    return c;
}

struct PoincareLelongReport {
    /// max over roots of |recovered atom mass - multiplicity|
    double residual = 0.0;
    /// total variation of the extracted measure away from the atoms
    double offroot_mass = 0.0;
    std::vector<std::pair<Point, double>> recovered;
};

/// Poincare-Lelong check: the Riesz measure of log|f| equals the
/// counting measure of zeros. Requires root separation >= 8h for the
/// ring sums.
inline PoincareLelongReport poincare_lelong(const HoloFunction& f, GridPtr grid,
                                            const RieszOptions& opt = {}) {
    const ZeroDivisor& d = f.divisor();
    if (d.min_separation() < 8 * grid->h())
        throw PreconditionError("poincare_lelong: root cluster below 8h separation");
    auto u = f.log_modulus_field(grid);
    auto nu = riesz_measure(u, opt);

    PoincareLelongReport rep;
    std::vector<bool> used(nu.atoms().size(), false);
    for (const auto& e : d.entries) {
        double best = kPosInf;
        int pick = -1;
        for (size_t k = 0; k < nu.atoms().size(); ++k) {
            double dist = std::abs(nu.atoms()[k].where - e.where);
            if (!used[k] && dist < best) {
                best = dist;
                pick = static_cast<int>(k);
            }
        }
        double mass = 0.0;
        if (pick >= 0 && best < 4 * grid->h()) {
            used[pick] = true;
            mass = nu.atoms()[pick].mass;
        }
        rep.recovered.emplace_back(e.where, mass);
        rep.residual = std::max(rep.residual, std::abs(mass - e.multiplicity));
    }
    for (size_t k = 0; k < nu.atoms().size(); ++k)
        if (!used[k]) rep.offroot_mass += std::abs(nu.atoms()[k].mass);
    for (double m : nu.cell_mass()) rep.offroot_mass += std::abs(m);
    return rep;
}

/// Weighted sum over the divisor off S: sum of multiplicity * v(point)
/// over entries outside the closed set S. Uses the test function's exact
/// evaluator when present, else bilinear interpolation.
inline double weighted_zero_sum(const ZeroDivisor& d, const TestFunction& v,
                                const ClosedBallUnion& S) {
    double total = 0.0;
    for (const auto& e : d.entries) {
        if (S.contains(e.where)) continue;
        total += e.multiplicity * v.value_at(e.where);
    }
    return total;
}

}  // namespace potlab
