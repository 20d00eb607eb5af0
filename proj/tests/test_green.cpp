#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "potlab/fields.hpp"
#include "potlab/green.hpp"

using namespace potlab;
using std::numbers::pi;

TEST_CASE("disk green function closed form") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 128);
    auto dom = ModelDomain::disk({0, 0}, 1.0);
    auto g = green_function(grid, dom, {0, 0});

    auto v = g.interpolate({0.5, 0.0});
    REQUIRE(v.has_value());
    CHECK(*v == Catch::Approx(std::log(2.0)).margin(1e-9));

    // Positive inside, decaying toward the boundary.
    // 0.9 is not a grid node; bilinear interpolation costs O(h^2).
    CHECK(g.interpolate({0.9, 0.0}).value() == Catch::Approx(std::log(1.0 / 0.9)).margin(1e-5));
    CHECK(g.interpolate({0.0, 0.99}).value() > 0.0);

    // Harmonic off the pole: discrete mean-value residual.
    const GridDomain& gd = *grid;
    double worst = 0.0;
    for (int j = 1; j < gd.ny() - 1; ++j)
        for (int i = 1; i < gd.nx() - 1; ++i) {
            Point z = gd.pos(i, j);
            if (std::abs(z) > 0.85 || std::abs(z) < 0.1) continue;
            double avg =
                0.25 * (g.at(i - 1, j) + g.at(i + 1, j) + g.at(i, j - 1) + g.at(i, j + 1));
            worst = std::max(worst, std::abs(g.at(i, j) - avg));
        }
    CHECK(worst < 5e-3);
}

TEST_CASE("green function rejects bad poles") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 64);
    auto dom = ModelDomain::disk({0, 0}, 1.0);
    CHECK_THROWS_AS(green_function(grid, dom, {1.5, 0.0}), PreconditionError);
    CHECK_THROWS_AS(green_function(grid, dom, {1.0, 0.0}), PreconditionError);
}

TEST_CASE("relaxation green function is symmetric") {
    auto grid = make_rectangle_grid({-0.5, 0.5, -0.5, 0.5}, 1.0 / 128);
    auto dom = ModelDomain::rectangle({-0.5, 0.5, -0.5, 0.5});

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-0.35, 0.35);
    double worst = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
        Point z(u(rng), u(rng)), w(u(rng), u(rng));
        if (std::abs(z - w) < 0.1) {
            --pair;
            continue;
        }
        auto gz = green_function(grid, dom, z);
        auto gw = green_function(grid, dom, w);
        worst = std::max(worst, std::abs(gz.interpolate(w).value() - gw.interpolate(z).value()));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("annulus green function via relaxation") {
    auto grid = make_annulus_grid({0, 0}, 0.2, 1.0, 1.0 / 128);
    auto dom = ModelDomain::annulus({0, 0}, 0.2, 1.0);
    auto g = green_function(grid, dom, {0.6, 0.0});

    // Positive inside, small near both boundary circles.
    CHECK(g.interpolate({-0.5, 0.2}).value() > 0.0);
    CHECK(g.interpolate({0.0, 0.22}).value() < 0.05);
    CHECK(g.interpolate({0.0, 0.98}).value() < 0.05);
    CHECK(g.interpolate({0.62, 0.02}).value() > 1.0);
}

TEST_CASE("extend_green vanishes outside and keeps inside values") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 128);
    auto dom = ModelDomain::disk({0, 0}, 0.7);
    auto g = green_function(grid, dom, {0.1, 0.0});
    auto ext = extend_green(g, dom);

    CHECK(ext.interpolate({0.9, 0.3}).value() == 0.0);
    CHECK(ext.interpolate({0.0, -0.9}).value() == 0.0);
    CHECK(ext.interpolate({0.3, 0.1}).value() ==
          Catch::Approx(g.interpolate({0.3, 0.1}).value()).margin(1e-12));
    // Regular boundary: the extension on the rim is O(h).
    double rim = ext.interpolate({0.7 * std::cos(0.4), 0.7 * std::sin(0.4)}).value();
    CHECK(rim >= 0.0);
    CHECK(rim < 10 * grid->h());
}

TEST_CASE("harmonic measure is a probability measure reproducing harmonic fields") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 64);

    SECTION("disk at the center is uniform") {
        auto dom = ModelDomain::disk({0, 0}, 1.0);
        auto mu = harmonic_measure(grid, dom, {0, 0}, 512);
        REQUIRE(mu.atoms().size() == 512);
        CHECK(mu.total() == Catch::Approx(1.0).margin(1e-10));
        for (const auto& a : mu.atoms())
            CHECK(a.mass == Catch::Approx(1.0 / 512).margin(1e-12));
    }

    SECTION("disk reproduction at an off-center point") {
        auto dom = ModelDomain::disk({0, 0}, 1.0);
        Point x0{0.3, -0.2};
        auto mu = harmonic_measure(grid, dom, x0, 4096);
        CHECK(mu.total() == Catch::Approx(1.0).margin(1e-10));
        auto tests = std::vector<std::function<double(Point)>>{
            [](Point) { return 1.0; },
            [](Point z) { return z.real(); },
            [](Point z) { return z.imag(); },
            [](Point z) { return (z * z).real(); },
        };
        for (const auto& f : tests) {
            double integral = 0.0;
            for (const auto& a : mu.atoms()) integral += a.mass * f(a.where);
            CHECK(integral == Catch::Approx(f(x0)).margin(1e-4));
        }
    }

    SECTION("rectangle reproduction through the grid exit distribution") {
        auto rgrid = make_rectangle_grid({-0.5, 0.5, -0.375, 0.375}, 1.0 / 64);
        auto dom = ModelDomain::rectangle({-0.5, 0.5, -0.375, 0.375});
        Point x0{0.125, -0.0625};  // node-aligned: the grid walk starts here
        auto mu = harmonic_measure(rgrid, dom, x0);
        CHECK(mu.total() == Catch::Approx(1.0).margin(1e-10));
        auto tests = std::vector<std::function<double(Point)>>{
            [](Point) { return 1.0; },
            [](Point z) { return z.real(); },
            [](Point z) { return z.imag(); },
            [](Point z) { return (z * z).real(); },
        };
        for (const auto& f : tests) {
            double integral = 0.0;
            for (const auto& a : mu.atoms()) integral += a.mass * f(a.where);
            CHECK(integral == Catch::Approx(f(x0)).margin(1e-4));
        }
    }

    SECTION("interval weights reproduce affine functions") {
        auto dom = ModelDomain::interval(0.0, 1.0);
        auto mid = harmonic_measure(grid, dom, {0.5, 0.0});
        REQUIRE(mid.atoms().size() == 2);
        CHECK(mid.atoms()[0].mass == Catch::Approx(0.5));
        CHECK(mid.atoms()[1].mass == Catch::Approx(0.5));

        auto quarter = harmonic_measure(grid, dom, {0.25, 0.0});
        // Weight 0.75 at 0 and 0.25 at 1: the choice forced by
        // int x dmu = x0.
        double at0 = 0, at1 = 0, xint = 0;
        for (const auto& a : quarter.atoms()) {
            xint += a.mass * a.where.real();
            (a.where.real() < 0.5 ? at0 : at1) += a.mass;
        }
        CHECK(at0 == Catch::Approx(0.75));
        CHECK(at1 == Catch::Approx(0.25));
        CHECK(xint == Catch::Approx(0.25));
    }
}

TEST_CASE("solve_dirichlet basics") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 64);

    SECTION("constant data extends to the constant") {
        auto u = solve_dirichlet(grid, [](Point) { return 2.5; });
        CHECK(u.interpolate({0.3, 0.3}).value() == Catch::Approx(2.5).margin(1e-9));
        CHECK(u.interpolate({0, 0}).value() == Catch::Approx(2.5).margin(1e-9));
    }

    SECTION("harmonic trace extends to the harmonic function") {
        auto u = solve_dirichlet(grid, [](Point z) { return z.real(); });
        double worst = 0.0;
        for (Point z : {Point(0.0, 0.0), Point(0.4, 0.2), Point(-0.6, 0.1)})
            worst = std::max(worst, std::abs(u.interpolate(z).value() - z.real()));
        CHECK(worst < 1e-6);
    }

    SECTION("boundary arc indicator at the center gives the arc fraction") {
        // Indicator of the arc theta in (0, pi/2) seen from the center.
        auto u = solve_dirichlet(grid, [](Point z) {
            double th = std::arg(z);
            return (th > 0 && th < pi / 2) ? 1.0 : 0.0;
        });
        CHECK(u.interpolate({0, 0}).value() == Catch::Approx(0.25).margin(2e-2));
    }

    SECTION("solver surfaces non-convergence") {
        SolveOptions opt;
        opt.max_sweeps = 3;
        CHECK_THROWS_AS(solve_dirichlet(grid, [](Point z) { return z.real(); }, nullptr, opt),
                        ConvergenceError);
    }
}

TEST_CASE("duality anchor: riesz of the extended green matches the harmonic measure") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 128);
    auto dom = ModelDomain::disk({0, 0}, 0.7);
    Point x0{0.2, 0.1};
    auto ghat = extend_green(green_function(grid, dom, x0), dom);
    auto nu = riesz_measure(ghat);
    auto omega = harmonic_measure(grid, dom, x0, 2048);

    // Bin both boundary measures by angle about the disk center and
    // compare in total variation. The riesz cells concentrate on the
    // collar ring at |z| = 0.7; each bin must cover a couple dozen collar
    // cells or the staircase dominates.
    const int bins = 16;
    std::vector<double> from_riesz(bins, 0.0), from_poisson(bins, 0.0);
    auto bin_of = [&](Point z) {
        double th = std::arg(z - dom.center);
        int b = static_cast<int>(std::floor((th + pi) / (2 * pi) * bins));
        return std::min(bins - 1, std::max(0, b));
    };
    double cell_total = 0.0;
    for (long idx = 0; idx < grid->size(); ++idx) {
        double m = nu.cell(idx);
        if (m == 0.0) continue;
        from_riesz[bin_of(grid->pos(static_cast<int>(idx)))] += m;
        cell_total += m;
    }
    for (const auto& a : omega.atoms()) from_poisson[bin_of(a.where)] += a.mass;

    CHECK(cell_total == Catch::Approx(1.0).margin(0.02));
    double tv = 0.0;
    for (int b = 0; b < bins; ++b) tv += std::abs(from_riesz[b] - from_poisson[b]);
    CHECK(tv / 2 < 0.02);

    // The pole shows up as the -1 atom of the extension's laplacian.
    REQUIRE(nu.atoms().size() == 1);
    CHECK(nu.atoms()[0].mass == Catch::Approx(-1.0).margin(0.01));
}
