#pragma once

#include <cmath>
#include <numbers>

#include "potlab/errors.hpp"
#include "potlab/field.hpp"
#include "potlab/geometry.hpp"

namespace potlab {

/// Real dimension m >= 1 of the ambient space. Grids in this library are
/// always planar (m = 2); higher m enters only through kernels and
/// normalization constants.
class Dimension {
public:
    explicit Dimension(int m) : m_(m) {
        if (m < 1) throw PreconditionError("dimension must be >= 1");
    }
    int value() const { return m_; }

    void require_at_least(int k) const {
        if (m_ < k) throw PreconditionError("operation requires dimension >= " + std::to_string(k));
    }

private:
    int m_;
};

/// Fundamental kernel: h_1(t) = t, h_2(t) = log|t|, h_m(t) = -|t|^(2-m)
/// for m >= 3. Nondecreasing in t > 0; h_m(0) = -inf for m >= 2.
inline double kernel_h(Dimension dim, double t) {
    const int m = dim.value();
    if (m == 1) return t;
    const double a = std::abs(t);
    if (m == 2) return std::log(a);  // log(0) = -inf, as intended
    if (a == 0.0) return kNegInf;
    return -std::pow(a, 2.0 - m);
}

/// Gamma(m/2) via exact half-integer closed forms (m <= 16 exercised).
inline double gamma_half(int m) {
    if (m < 1) throw PreconditionError("gamma_half needs m >= 1");
    if (m % 2 == 0) {
        double g = 1.0;  // (m/2 - 1)!
        for (int k = 2; k <= m / 2 - 1; ++k) g *= k;
        return g;
    }
    // Gamma(1/2 + k) = (2k)! sqrt(pi) / (4^k k!), with m = 2k + 1.
    const int k = (m - 1) / 2;
    double g = std::sqrt(std::numbers::pi);
    for (int j = 1; j <= k; ++j) g *= (j - 0.5);
    return g;
}

/// s_{m-1} = 2 pi^{m/2} max{1, m-2} / Gamma(m/2): the unit-sphere area
/// times max{1, m-2}. Normalizes the distributional Laplacian.
inline double sphere_constant(Dimension dim) {
    const int m = dim.value();
    return 2.0 * std::pow(std::numbers::pi, m / 2.0) * std::max(1, m - 2) / gamma_half(m);
}

/// b_0 = 1; b_p = s_{p-1} / (p max{1, p-2}) = volume of the unit ball in
/// R^p. Normalizes the p-dimensional Hausdorff measure.
inline double ball_volume_constant(int p) {
    if (p < 0) throw PreconditionError("ball_volume_constant needs p >= 0");
    if (p == 0) return 1.0;
    return sphere_constant(Dimension(p)) / (p * std::max(1, p - 2));
}

/// Inversion about `center`: y = x - center maps to y/|y|^2; the center
/// and the point at infinity swap. Involution.
inline ExtendedPoint inversion(const ExtendedPoint& x, Point center = {0.0, 0.0}) {
    if (x.at_infinity) return ExtendedPoint(center);
    const Point y = x.p - center;
    const double n2 = std::norm(y);
    if (n2 == 0.0) return ExtendedPoint::infinity();
    return ExtendedPoint(center + y / n2);
}

/// Kelvin transform u*(x*) = |x - center|^{m-2} u(x) of a grid field,
/// resampled on the inverted region. The input region must stay away from
/// the inversion center; spacing of the output grid may be overridden.
inline ScalarField kelvin_transform(const ScalarField& u, Dimension dim,
                                    Point center = {0.0, 0.0}, double h_out = 0.0) {
    dim.require_at_least(2);
    const int m = dim.value();
    const GridDomain& g = u.dom();
    double r_min = kPosInf, r_max = 0.0;
    for (long idx = 0; idx < g.size(); ++idx) {
        if (!u.defined(idx) || !g.interior(static_cast<int>(idx))) continue;
        double d = std::abs(g.pos(static_cast<int>(idx)) - center);
        r_min = std::min(r_min, d);
        r_max = std::max(r_max, d);
    }
    if (!(r_min > 2 * g.h()))
        throw PreconditionError("kelvin_transform: region touches the inversion center");
    if (h_out <= 0) h_out = g.h();
    // The image of {r_min <= |x-c| <= r_max} is the annulus with radii
    // 1/r_max, 1/r_min about the same center.
    auto out_grid = make_annulus_grid(center, 0.9 / r_max, 1.1 / r_min, h_out);
    ScalarField out(out_grid, 0.0, false);
    for (long idx = 0; idx < out_grid->size(); ++idx) {
        const Point y = out_grid->pos(static_cast<int>(idx));
        const Point w = y - center;
        const double n2 = std::norm(w);
        if (n2 == 0.0) continue;
        const Point x = center + w / n2;
        auto v = u.interpolate(x);
        if (!v) continue;
        // |x - c| = 1/|y - c|, so the modulus factor is |y - c|^{2-m}.
        out[idx] = std::pow(std::sqrt(n2), 2.0 - m) * (*v);
        out.set_defined(idx, true);
    }
    return out;
}

}  // namespace potlab
