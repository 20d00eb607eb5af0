#pragma once

#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <vector>

namespace potlab {

/// Planar points are complex numbers; |z| is the euclidean norm.
using Point = std::complex<double>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

/// Point of the one-point compactification: either a finite point or the
/// distinguished point at infinity. The compactification is part of the
/// data model, not an IEEE overflow.
struct ExtendedPoint {
    Point p{0.0, 0.0};
    bool at_infinity = false;

    ExtendedPoint() = default;
    ExtendedPoint(Point q) : p(q) {}
    ExtendedPoint(double x, double y) : p(x, y) {}

    static ExtendedPoint infinity() {
        ExtendedPoint e;
        e.at_infinity = true;
        return e;
    }

    bool is_finite() const { return !at_infinity; }
    double abs() const { return at_infinity ? kPosInf : std::abs(p); }

    friend bool operator==(const ExtendedPoint& a, const ExtendedPoint& b) {
        if (a.at_infinity || b.at_infinity) return a.at_infinity == b.at_infinity;
        return a.p == b.p;
    }
};

/// Closed ball {|z - center| <= radius}.
struct ClosedBall {
    Point center{0.0, 0.0};
    double radius = 0.0;

    bool contains(Point z) const { return std::abs(z - center) <= radius; }
};

/// Finite union of closed balls; stands in for the compact exclusion set S.
struct ClosedBallUnion {
    std::vector<ClosedBall> balls;

    ClosedBallUnion() = default;
    ClosedBallUnion(std::initializer_list<ClosedBall> bs) : balls(bs) {}
    static ClosedBallUnion ball(Point c, double r) { return ClosedBallUnion{{c, r}}; }

    bool empty() const { return balls.empty(); }
    bool contains(Point z) const {
        for (const auto& b : balls)
            if (b.contains(z)) return true;
        return false;
    }
};

struct Rect {
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;

    bool contains(Point z) const {
        return z.real() > x0 && z.real() < x1 && z.imag() > y0 && z.imag() < y1;
    }
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

}  // namespace potlab
