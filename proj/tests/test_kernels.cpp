#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "potlab/fields.hpp"
#include "potlab/kernels.hpp"

using namespace potlab;
using std::numbers::pi;

TEST_CASE("kernel_h closed forms") {
    CHECK(kernel_h(Dimension(1), 0.7) == 0.7);
    CHECK(kernel_h(Dimension(2), 1.0) == 0.0);
    CHECK(kernel_h(Dimension(3), 1.0) == -1.0);
    CHECK(kernel_h(Dimension(2), 0.0) == kNegInf);
    CHECK(kernel_h(Dimension(5), 0.0) == kNegInf);
    CHECK(kernel_h(Dimension(2), std::exp(1.0)) == Catch::Approx(1.0));
    CHECK(kernel_h(Dimension(4), 2.0) == Catch::Approx(-0.25));
}

TEST_CASE("kernel_h nondecreasing in t > 0") {
    for (int m = 1; m <= 6; ++m) {
        double prev = kNegInf;
        for (double t = 1e-3; t < 10.0; t *= 1.17) {
            double v = kernel_h(Dimension(m), t);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("sphere and ball constants") {
    CHECK(sphere_constant(Dimension(2)) == Catch::Approx(2 * pi).epsilon(1e-13));
    CHECK(sphere_constant(Dimension(3)) == Catch::Approx(4 * pi).epsilon(1e-13));
    CHECK(sphere_constant(Dimension(4)) == Catch::Approx(4 * pi * pi).epsilon(1e-13));
    CHECK(ball_volume_constant(0) == 1.0);
    CHECK(ball_volume_constant(2) == Catch::Approx(pi).epsilon(1e-13));
    CHECK(ball_volume_constant(4) == Catch::Approx(pi * pi / 2).epsilon(1e-13));
}

TEST_CASE("cross identity b_p = s_{p-1} / (p max{1,p-2})") {
    for (int p = 1; p <= 8; ++p) {
        double lhs = ball_volume_constant(p);
        double rhs = sphere_constant(Dimension(p)) / (p * std::max(1, p - 2));
        CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("inversion fixed points and involution") {
    CHECK(inversion(ExtendedPoint(0.0, 0.0)) == ExtendedPoint::infinity());
    CHECK(inversion(ExtendedPoint::infinity()) == ExtendedPoint(0.0, 0.0));

    // Unit circle is fixed.
    Point z = std::polar(1.0, 0.83);
    auto img = inversion(ExtendedPoint(z));
    REQUIRE(img.is_finite());
    CHECK(std::abs(img.p - z) < 1e-15);

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int t = 0; t < 50; ++t) {
        Point p(u(rng), u(rng));
        Point c(u(rng) / 4, u(rng) / 4);
        if (std::abs(p - c) < 1e-3) continue;
        auto twice = inversion(inversion(ExtendedPoint(p), c), c);
        REQUIRE(twice.is_finite());
        CHECK(std::abs(twice.p - p) < 1e-12);
    }
}

TEST_CASE("inversion swaps B(infinity, r) and B(0, r)") {
    // B(infinity, r) = {|x| > 1/r}; its image is {0 < |x| < r}.
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    const double r = 0.8;
    for (int t = 0; t < 200; ++t) {
        Point p(u(rng), u(rng));
        if (std::abs(p) < 1e-6) continue;
        bool in_ball_at_inf = std::abs(p) > 1.0 / r;
        auto img = inversion(ExtendedPoint(p));
        REQUIRE(img.is_finite());
        CHECK((std::abs(img.p) < r) == in_ball_at_inf);
    }
}

TEST_CASE("kelvin transform in the plane is plain inversion pullback") {
    auto grid = make_annulus_grid({0, 0}, 0.4, 0.9, 1.0 / 64);
    auto u = ScalarField::sample(grid, [](Point z) { return z.real() + 0.3 * z.imag(); });
    auto star = kelvin_transform(u, Dimension(2));
    // u*(y) = u(y/|y|^2): check at a few image points.
    for (Point y : {Point(1.3, 0.2), Point(0.0, 1.5), Point(-1.2, -0.7)}) {
        Point x = y / std::norm(y);
        auto got = star.interpolate(y);
        REQUIRE(got.has_value());
        CHECK(*got == Catch::Approx(x.real() + 0.3 * x.imag()).margin(2e-3));
    }
}

TEST_CASE("kelvin transform of the constant 1 in dimension 3") {
    auto grid = make_annulus_grid({0, 0}, 0.4, 0.9, 1.0 / 64);
    auto u = ScalarField::sample(grid, [](Point) { return 1.0; });
    auto star = kelvin_transform(u, Dimension(3));
    for (Point y : {Point(1.4, 0.0), Point(0.0, 1.8), Point(-1.5, 0.9)}) {
        auto got = star.interpolate(y);
        REQUIRE(got.has_value());
        CHECK(*got == Catch::Approx(1.0 / std::abs(y)).margin(2e-3));
    }
}

TEST_CASE("kelvin transform preserves harmonicity (m = 2)") {
    auto grid = make_annulus_grid({0, 0}, 0.35, 0.95, 1.0 / 128);
    // Harmonic off the origin; its Kelvin image is Re(y) - log|y| exactly.
    auto u = ScalarField::sample(grid, [](Point z) {
        return (z / std::norm(z)).real() + std::log(std::abs(z));
    });
    auto star = kelvin_transform(u, Dimension(2));
    const GridDomain& g = star.dom();
    double worst_identity = 0.0, worst_residual = 0.0;
    long checked = 0;
    for (int j = 2; j < g.ny() - 2; ++j)
        for (int i = 2; i < g.nx() - 2; ++i) {
            Point y = g.pos(i, j);
            double r = std::abs(y);
            if (r < 1.0 / 0.95 + 0.1 || r > 1.0 / 0.35 - 0.1) continue;
            if (!star.defined(i, j) || !star.defined(i - 1, j) || !star.defined(i + 1, j) ||
                !star.defined(i, j - 1) || !star.defined(i, j + 1))
                continue;
            worst_identity =
                std::max(worst_identity, std::abs(star.at(i, j) - (y.real() - std::log(r))));
            double avg = 0.25 * (star.at(i - 1, j) + star.at(i + 1, j) + star.at(i, j - 1) +
                                 star.at(i, j + 1));
            worst_residual = std::max(worst_residual, std::abs(star.at(i, j) - avg));
            ++checked;
        }
    REQUIRE(checked > 1000);
    CHECK(worst_identity < 2e-3);
    CHECK(worst_residual < 5e-3);
}

TEST_CASE("kelvin transform rejects regions touching the center") {
    auto grid = make_disk_grid({0, 0}, 0.5, 1.0 / 32);
    auto u = ScalarField::sample(grid, [](Point) { return 1.0; });
    CHECK_THROWS_AS(kelvin_transform(u, Dimension(2)), PreconditionError);
}
