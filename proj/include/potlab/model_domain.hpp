#pragma once

#include <cmath>
#include <string>

#include "potlab/errors.hpp"
#include "potlab/geometry.hpp"

namespace potlab {

/// Model domain with a known geometry: the regular domains the library
/// can hand closed forms or a relaxation solver. The interval kind only
/// makes sense under one-dimensional (affine) semantics.
struct ModelDomain {
    enum class Kind { Disk, Annulus, Rectangle, Interval };

    Kind kind = Kind::Disk;
    Point center{0.0, 0.0};
    double radius = 1.0;  // outer radius (disk/annulus)
    double inner = 0.0;   // inner radius (annulus)
    Rect rect{};
    double a = 0.0, b = 0.0;  // interval endpoints
    bool regular = true;

    static ModelDomain disk(Point c, double R) {
        if (!(R > 0)) throw PreconditionError("disk radius must be positive");
        ModelDomain d;
        d.kind = Kind::Disk;
        d.center = c;
        d.radius = R;
        return d;
    }

    static ModelDomain annulus(Point c, double r, double R) {
        if (!(0 < r && r < R)) throw PreconditionError("annulus needs 0 < r < R");
        ModelDomain d;
        d.kind = Kind::Annulus;
        d.center = c;
        d.inner = r;
        d.radius = R;
        return d;
    }

    static ModelDomain rectangle(Rect r) {
        if (!(r.width() > 0 && r.height() > 0))
            throw PreconditionError("rectangle must be nonempty");
        ModelDomain d;
        d.kind = Kind::Rectangle;
        d.rect = r;
        return d;
    }

    static ModelDomain interval(double a, double b) {
        if (!(a < b)) throw PreconditionError("interval needs a < b");
        ModelDomain d;
        d.kind = Kind::Interval;
        d.a = a;
        d.b = b;
        return d;
    }

    bool contains(Point z) const {
        switch (kind) {
            case Kind::Disk:
                return std::abs(z - center) < radius;
            case Kind::Annulus: {
                double d = std::abs(z - center);
                return d > inner && d < radius;
            }
            case Kind::Rectangle:
                return rect.contains(z);
            case Kind::Interval:
                return z.imag() == 0.0 && z.real() > a && z.real() < b;
        }
        return false;
    }

    /// Distance from an inside point to the boundary (2-D kinds).
    double boundary_distance(Point z) const {
        switch (kind) {
            case Kind::Disk:
                return radius - std::abs(z - center);
            case Kind::Annulus: {
                double d = std::abs(z - center);
                return std::min(radius - d, d - inner);
            }
            case Kind::Rectangle:
                return std::min(std::min(z.real() - rect.x0, rect.x1 - z.real()),
                                std::min(z.imag() - rect.y0, rect.y1 - z.imag()));
            case Kind::Interval:
                return std::min(z.real() - a, b - z.real());
        }
        return 0.0;
    }

    std::string describe() const {
        switch (kind) {
            case Kind::Disk:
                return "disk";
            case Kind::Annulus:
                return "annulus";
            case Kind::Rectangle:
                return "rectangle";
            case Kind::Interval:
                return "interval";
        }
        return "?";
    }
};

}  // namespace potlab
