#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "potlab/testfn.hpp"

using namespace potlab;

TEST_CASE("classify_test clauses") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 128);
    auto S = ClosedBallUnion::ball({0, 0}, 0.5);

    SECTION("an extended green function restricted off S is a member") {
        auto dom = ModelDomain::disk({0, 0}, 1.0);
        auto ghat = extend_green(green_function(grid, dom, {0.1, 0.0}), dom);
        auto rep = classify_test(ghat, S, std::log(2.0) + 0.3);
        CHECK(rep.member());
    }

    SECTION("a positive constant has no boundary decay") {
        auto c = ScalarField(grid, 0.25);
        auto rep = classify_test(c, S, 1.0);
        CHECK_FALSE(rep.member());
        CHECK(rep.failing_clause() == "iv: boundary decay");
    }

    SECTION("zero is a degenerate member for every bound") {
        auto z = ScalarField(grid, 0.0);
        CHECK(classify_test(z, S, 0.0).member());
        CHECK(classify_test(z, S, 3.0).member());
    }
}

TEST_CASE("glue") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 64);

    SECTION("dominated field glues to the host") {
        auto v0 = ScalarField::sample(grid, [](Point z) { return std::norm(z); });
        ScalarField v = v0;
        for (long idx = 0; idx < grid->size(); ++idx) {
            v[idx] -= 0.3;
            if (std::abs(grid->pos(static_cast<int>(idx))) > 0.6) v.set_defined(idx, false);
        }
        auto glued = glue(v, v0);
        for (long idx = 0; idx < grid->size(); ++idx)
            CHECK(glued[idx] == v0[idx]);
    }

    SECTION("max with zero host on the overlap, host elsewhere") {
        auto v0 = ScalarField(grid, 0.0);
        auto v = ScalarField::sample(grid, [](Point z) {
            return std::log(std::abs(z)) / 3.0;  // <= 0 near |z| = 1
        });
        ScalarField vr = v.restricted([](Point z) { return std::abs(z) < 0.9; });
        vr.add_marker({{0, 0}, -1, -1});
        auto glued = glue(vr, v0);
        for (long idx = 0; idx < grid->size(); ++idx) {
            Point z = grid->pos(static_cast<int>(idx));
            if (glued.marker_at(idx)) continue;
            if (std::abs(z) < 0.9)
                CHECK(glued[idx] == std::max(vr[idx], 0.0));
            else
                CHECK(glued[idx] == 0.0);
        }
        CHECK(check_subharmonic(glued).empty());
    }

    SECTION("incompatible boundary values are rejected with witnesses") {
        auto v0 = ScalarField(grid, 0.0);
        auto v = ScalarField(grid, 0.5);  // limsup 0.5 > 0 at the cut
        ScalarField vr = v.restricted([](Point z) { return std::abs(z) < 0.5; });
        try {
            glue(vr, v0);
            FAIL("expected rejection");
        } catch (const PreconditionError& e) {
            CHECK_FALSE(e.witness_cells.empty());
        }
    }
}

TEST_CASE("extend_test construction") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 256);
    auto S = ClosedBallUnion::ball({0, 0}, 0.5);
    auto dtilde = ModelDomain::disk({0, 0}, 1.0);

    SECTION("zero test function reproduces the extended green function") {
        TestFunction zero;
        zero.field = ScalarField(grid, 0.0);
        zero.bound = 1.0;
        auto res = extend_test(zero, S, {0, 0}, dtilde, 1.0);
        auto ghat = extend_green(green_function(grid, dtilde, {0, 0}), dtilde);
        for (Point z : {Point(0.3, 0.0), Point(0.7, 0.1), Point(0.0, 0.95)})
            CHECK(res.v_tilde.interpolate(z).value() ==
                  Catch::Approx(ghat.interpolate(z).value()).margin(1e-12));
    }

    SECTION("the classical disk scenario pins c_tilde = log 2") {
        auto v = green_test_function(grid, dtilde, {0, 0}, 1.0, S);
        v.bound = 1.0;
        auto res = extend_test(v, S, {0, 0}, dtilde, 1.0);
        CHECK(res.c_tilde == Catch::Approx(std::log(2.0)).margin(1e-6));
        // The three construction postconditions, discretely.
        CHECK(res.harmonicity_residual <= 5e-3);
        CHECK(res.outer_collar_max <= 10 * grid->h());
        CHECK(res.normalization.ratio >= 0.98);
        CHECK(res.normalization.ratio <= 1.02);
    }

    SECTION("degenerate placement is rejected") {
        TestFunction zero;
        zero.field = ScalarField(grid, 0.0);
        zero.bound = 1.0;
        // S pokes outside dtilde: no positive infimum of green on dS.
        auto small = ModelDomain::disk({0, 0}, 0.45);
        CHECK_THROWS_AS(extend_test(zero, S, {0, 0}, small, 1.0), PreconditionError);
    }
}

TEST_CASE("truncation sequence") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 256);
    auto S = ClosedBallUnion::ball({0, 0}, 0.5);
    auto dtilde = ModelDomain::disk({0, 0}, 1.0);
    auto v = green_test_function(grid, dtilde, {0, 0}, 1.0, S);
    v.bound = 1.0;
    auto vt = extend_test(v, S, {0, 0}, dtilde, 1.0).v_tilde;

    auto v4 = truncate_sequence(vt, 4);
    auto v16 = truncate_sequence(vt, 16);
    auto v64 = truncate_sequence(vt, 64);

    SECTION("cells at or below the cut vanish; the rest drop by 1/n") {
        for (long idx = 0; idx < grid->size(); ++idx) {
            if (v4.marker_at(idx)) continue;
            if (vt[idx] <= 0.25)
                CHECK(v4[idx] == 0.0);
            else
                CHECK(v4[idx] == vt[idx] - 0.25);
        }
    }

    SECTION("monotone in n with uniform gap 1/n") {
        double sup_gap4 = 0.0;
        for (long idx = 0; idx < grid->size(); ++idx) {
            if (v4.marker_at(idx)) continue;
            CHECK(v4[idx] <= v16[idx]);
            CHECK(v16[idx] <= v64[idx]);
            CHECK(v64[idx] <= std::max(vt[idx], 0.0));
            if (v4[idx] > 0) sup_gap4 = std::max(sup_gap4, vt[idx] - v4[idx]);
        }
        CHECK(sup_gap4 <= 0.25 + 1e-12);
    }

    SECTION("truncations are jensen potentials") {
        for (const ScalarField* vn : {&v4, &v16, &v64}) {
            auto rep = is_jensen_potential(*vn, {0, 0});
            INFO(rep.failing_clause());
            CHECK(rep.pass());
        }
    }
}

TEST_CASE("is_jensen_potential verdicts") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 128);
    auto dom = ModelDomain::disk({0, 0}, 0.7);
    auto ghat = extend_green(green_function(grid, dom, {0, 0}), dom);

    CHECK(is_jensen_potential(ghat, {0, 0}).pass());
    CHECK(is_jensen_potential(ScalarField(grid, 0.0), {0, 0}).pass());

    auto twice = is_jensen_potential(ghat.scaled(2.0), {0, 0});
    CHECK_FALSE(twice.pass());
    CHECK(twice.normalization.ratio == Catch::Approx(2.0).margin(0.05));
    CHECK(twice.failing_clause() == "pole seminormalization");
}

TEST_CASE("greatest minorant") {
    auto grid = make_disk_grid({0, 0}, 1.0, 1.0 / 256);
    auto S = ClosedBallUnion::ball({0, 0}, 0.5);
    auto dom = ModelDomain::disk({0, 0}, 1.0);
    auto ghat = extend_green(green_function(grid, dom, {0, 0}), dom);

    SECTION("zero obstacle gives zero") {
        auto res = greatest_minorant(ScalarField(grid, 0.0), S);
        CHECK(res.stats.converged);
        for (long idx = 0; idx < grid->size(); ++idx)
            if (res.gm.defined(idx)) CHECK(std::abs(res.gm[idx]) < 1e-11);
    }

    SECTION("an obstacle already in the cone is a fixed point") {
        auto res = greatest_minorant(ghat, S);
        double worst = 0.0;
        for (long idx = 0; idx < grid->size(); ++idx)
            if (res.gm.defined(idx) && !res.gm.marker_at(idx) &&
                grid->interior(static_cast<int>(idx)))
                worst = std::max(worst, std::abs(res.gm[idx] - ghat[idx]));
        CHECK(worst < 1e-4);
    }

    SECTION("constant obstacle: dominated by the scaled green function") {
        const double b = 0.8;
        auto res = greatest_minorant(ScalarField(grid, b), S);
        CHECK(res.stats.converged);
        CHECK(res.stats.final_step < 1e-8);

        // C = b / inf g over the discrete contact ring at dS.
        double inf_g = kPosInf;
        const GridDomain& g = *grid;
        for (int j = 1; j < g.ny() - 1; ++j)
            for (int i = 1; i < g.nx() - 1; ++i) {
                if (S.contains(g.pos(i, j)) || !g.interior(i, j)) continue;
                bool touches = S.contains(g.pos(i - 1, j)) || S.contains(g.pos(i + 1, j)) ||
                               S.contains(g.pos(i, j - 1)) || S.contains(g.pos(i, j + 1));
                if (touches) inf_g = std::min(inf_g, ghat.at(i, j));
            }
        const double C = b / inf_g;
        long checked = 0;
        for (long idx = 0; idx < grid->size(); ++idx) {
            if (!res.gm.defined(idx) || !grid->interior(static_cast<int>(idx))) continue;
            Point z = grid->pos(static_cast<int>(idx));
            if (S.contains(z)) continue;
            CHECK(res.gm[idx] <= b + 1e-12);
            CHECK(res.gm[idx] <= C * ghat[idx] + 1e-6);
            ++checked;
        }
        CHECK(checked > 100000);
        CHECK(check_subharmonic(res.gm).empty());
    }

    SECTION("idempotence") {
        auto once = greatest_minorant(ScalarField(grid, 0.8), S);
        auto twice = greatest_minorant(once.gm, S);
        double drift = 0.0;
        for (long idx = 0; idx < grid->size(); ++idx)
            if (once.gm.defined(idx) && twice.gm.defined(idx))
                drift = std::max(drift, std::abs(once.gm[idx] - twice.gm[idx]));
        CHECK(drift <= 1e-10);
    }

    SECTION("monotone in the obstacle") {
        auto lo = greatest_minorant(ghat, S);
        auto hi = greatest_minorant(ScalarField::combine(ghat, ScalarField(grid, 0.2),
                                                         [](double a, double b) { return a + b; }),
                                    S);
        for (long idx = 0; idx < grid->size(); ++idx)
            if (lo.gm.defined(idx) && hi.gm.defined(idx))
                CHECK(lo.gm[idx] <= hi.gm[idx] + 1e-9);
    }
}
