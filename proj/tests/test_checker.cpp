#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "potlab/checker.hpp"

using namespace potlab;

namespace {

GridPtr unit_grid(double h = 1.0 / 128) { return make_disk_grid({0, 0}, 1.0, h); }

MajorantSpec zero_majorant(GridPtr grid) { return MajorantSpec::zero(grid); }

TestFunction unit_green_tf(GridPtr grid, const ClosedBallUnion& S, double scale = 1.0) {
    auto v = green_test_function(grid, ModelDomain::disk({0, 0}, 1.0), {0, 0}, scale, S);
    v.bound = 1.0;
    return v;
}

}  // namespace

TEST_CASE("main_constant closed forms") {
    auto grid = unit_grid();
    auto S = ClosedBallUnion::ball({0, 0}, 0.5);
    auto dtilde = ModelDomain::disk({0, 0}, 1.0);

    double C = main_constant(grid, S, {0, 0}, dtilde, 1.0);
    CHECK(C == Catch::Approx(1.0 / std::log(2.0)).margin(1e-9));

    double C2 = main_constant(grid, S, {0, 0}, dtilde, 2.0);
    CHECK(C2 == Catch::Approx(2.0 * C).margin(1e-12));

    double C_small = main_constant(grid, ClosedBallUnion::ball({0, 0}, 0.25), {0, 0}, dtilde, 1.0);
    CHECK(C_small < C);
    CHECK(C_small == Catch::Approx(1.0 / std::log(4.0)).margin(1e-9));
}

TEST_CASE("cbar_constant") {
    auto grid = unit_grid();
    auto S = ClosedBallUnion::ball({0, 0}, 0.4);
    auto dtilde = ModelDomain::disk({0, 0}, 0.8);

    SECTION("zero majorant gives zero") {
        auto M = zero_majorant(grid);
        CHECK(cbar_constant(grid, {0, 0}, S, dtilde, M) == 0.0);
    }

    SECTION("one log pole integrates to the green value") {
        Point a{0.3, 0.2};
        auto u1 = ScalarField::sample(
            grid, [a](Point z) { return std::log(std::abs(z - a)); }, {Marker{a, -1, -1}});
        auto M = make_delta_sbh(u1, ScalarField(grid, 0.0));
        double expect = green_disk(a, {0, 0}, {0, 0}, 0.8);  // M^+(x0) = 0
        CHECK(cbar_constant(grid, {0, 0}, S, dtilde, M) ==
              Catch::Approx(expect).margin(0.01));
    }

    SECTION("a negative atom at x0 flags +infinity") {
        MajorantSpec M = zero_majorant(grid);
        M.charge.add_atom({0, 0}, -0.6);
        CHECK(std::isinf(cbar_constant(grid, {0, 0}, S, dtilde, M)));
    }
}

TEST_CASE("verify_main") {
    auto grid = unit_grid();
    auto S = ClosedBallUnion::ball({0, 0}, 0.5);
    auto dtilde = ModelDomain::disk({0, 0}, 1.0);

    SECTION("u = M harmonic with v = 0 sits on the equality edge") {
        auto uf = ScalarField::sample(grid, [](Point z) { return 0.5 + z.real(); });
        MajorantSpec M;
        M.u1 = uf;
        M.u2 = ScalarField(grid, 0.0);
        M.charge = RieszCharge::subtract(riesz_measure(uf), riesz_measure(M.u2));
        M.dom_mask.assign(grid->size(), 1);
        TestFunction v;
        v.field = ScalarField(grid, 0.0);
        v.bound = 1.0;
        auto rep = verify_main(grid, uf, M, v, S, {0, 0}, dtilde, 1.0);
        CHECK(rep.pass);
        CHECK(std::abs(rep.margin) < 1e-6 * rep.diagnostics["scale"]);
    }

    SECTION("log of a blaschke product under the zero majorant") {
        auto B = HoloFunction::blaschke(
            {{{0.6, 0.0}, 1}, {{0.7, 0.0}, 1}, {{0.0, -0.8}, 1}, {{0.55, 0.3}, 1}});
        auto u = B.log_modulus_field(grid);
        auto M = zero_majorant(grid);
        auto v = unit_green_tf(grid, S);
        auto rep = verify_main(grid, u, M, v, S, {0, 0}, dtilde, 1.0);
        CHECK(rep.pass);
        CHECK(rep.margin >= 0.0);
        CHECK(rep.C == Catch::Approx(1.0 / std::log(2.0)).margin(1e-9));
    }

    SECTION("u > M is rejected with witnesses") {
        auto uf = ScalarField::sample(grid, [](Point z) { return 0.1 + z.real(); });
        auto M = zero_majorant(grid);
        TestFunction v;
        v.field = ScalarField(grid, 0.0);
        v.bound = 1.0;
        try {
            verify_main(grid, uf, M, v, S, {0, 0}, dtilde, 1.0);
            FAIL("expected rejection");
        } catch (const PreconditionError& e) {
            CHECK_FALSE(e.witness_cells.empty());
        }
    }
}

TEST_CASE("verify_uniform closed-form blaschke budget") {
    auto grid = unit_grid(1.0 / 256);
    auto S = ClosedBallUnion::ball({0, 0}, 0.5);
    auto dtilde = ModelDomain::disk({0, 0}, 1.0);
    auto B = HoloFunction::blaschke({{{0.6, 0.0}, 1},
                                     {{0.7, 0.0}, 1},
                                     {{0.8, 0.0}, 1},
                                     {{0.55, 0.3}, 1},
                                     {{-0.75, 0.0}, 1}});
    auto M = zero_majorant(grid);
    auto v = unit_green_tf(grid, S);
    auto rep = verify_uniform(grid, B, M, v, S, {0, 0}, 1.0, dtilde);

    double sum = 0.0;
    for (const auto& r : B.divisor().entries) sum += std::log(1.0 / std::abs(r.where));
    CHECK(rep.lhs == Catch::Approx(sum).margin(1e-9));
    CHECK(rep.rhs == Catch::Approx(sum / std::log(2.0)).margin(1e-6));
    CHECK(rep.pass);
    CHECK(rep.margin == Catch::Approx(sum * (1 / std::log(2.0) - 1)).margin(1e-6));
}

TEST_CASE("verify_uniform edge cases") {
    auto grid = unit_grid();
    auto S = ClosedBallUnion::ball({0, 0}, 0.5);

    SECTION("no zeros outside S is trivially within budget") {
        auto f = HoloFunction::blaschke({{{0.1, 0.1}, 2}});
        auto rep = verify_uniform(grid, f, zero_majorant(grid), unit_green_tf(grid, S), S,
                                  {0.02, 0.0}, 1.0, ModelDomain::disk({0, 0}, 1.0));
        CHECK(rep.lhs == 0.0);
        CHECK(rep.pass);
    }

    SECTION("a family sweep shares the constants and passes throughout") {
        auto f = HoloFunction::blaschke({{{0.6, 0.0}, 1}, {{0.0, 0.75}, 1}});
        std::vector<TestFunction> family;
        for (int k = 1; k <= 10; ++k)
            family.push_back(unit_green_tf(grid, S, 0.1 * k));
        auto reps = verify_uniform_sweep(grid, f, zero_majorant(grid), family, S, {0, 0}, 1.0,
                                         ModelDomain::disk({0, 0}, 1.0));
        REQUIRE(reps.size() == 10);
        for (const auto& r : reps) {
            CHECK(r.pass);
            CHECK(r.C == reps.front().C);
            CHECK(r.cbar == reps.front().cbar);
        }
    }

    SECTION("|f| > exp M is rejected") {
        auto f = HoloFunction::polynomial({{{0.3, 0.0}, 1}}, {10.0, 0.0});
        CHECK_THROWS_AS(verify_uniform(grid, f, zero_majorant(grid), unit_green_tf(grid, S), S,
                                       {0, 0}, 1.0, ModelDomain::disk({0, 0}, 1.0)),
                        PreconditionError);
    }

    SECTION("f(z0) = 0 is rejected") {
        auto f = HoloFunction::blaschke({{{0.0, 0.0}, 1}});
        CHECK_THROWS_AS(verify_uniform(grid, f, zero_majorant(grid), unit_green_tf(grid, S), S,
                                       {0, 0}, 1.0, ModelDomain::disk({0, 0}, 1.0)),
                        PreconditionError);
    }
}

TEST_CASE("verify_individual_1 exhaustion ladder") {
    auto grid = unit_grid();
    auto B = HoloFunction::blaschke(
        {{{0.6, 0.0}, 1}, {{0.0, 0.72}, 2}, {{-0.8, 0.1}, 1}, {{0.3, 0.85}, 1}});
    auto M = zero_majorant(grid);
    std::vector<ClosedBallUnion> exhaustion = {
        ClosedBallUnion::ball({0, 0}, 0.5), ClosedBallUnion::ball({0, 0}, 0.7),
        ClosedBallUnion::ball({0, 0}, 0.85), ClosedBallUnion::ball({0, 0}, 0.97)};
    auto v = unit_green_tf(grid, exhaustion.front());
    auto w = ScalarField(grid, 1.0);  // dominates v near the boundary

    auto rep = verify_individual_1(grid, B, M, w, v, exhaustion, 1.0);
    CHECK(rep.nondecreasing);
    CHECK(rep.bounded);
    CHECK(rep.pass());
    CHECK(rep.partial_sums.front() == 0.0);
    CHECK(rep.partial_sums.back() > 0.0);

    SECTION("the zero test function collapses every partial sum") {
        TestFunction zero;
        zero.field = ScalarField(grid, 0.0);
        zero.bound = 1.0;
        auto rz = verify_individual_1(grid, B, M, w, zero, exhaustion, 1.0);
        for (double s : rz.partial_sums) CHECK(s == 0.0);
        CHECK(rz.pass());
    }
}

TEST_CASE("verify_individual_2 routes through the greatest minorant") {
    auto grid = unit_grid();
    auto S = ClosedBallUnion::ball({0, 0}, 0.5);
    auto B = HoloFunction::blaschke({{{0.6, 0.0}, 1}, {{0.0, 0.7}, 1}});
    auto M = zero_majorant(grid);
    auto dom = ModelDomain::disk({0, 0}, 1.0);

    SECTION("w already in the cone reduces to the uniform check") {
        auto ghat = extend_green(green_function(grid, dom, {0, 0}), dom);
        auto rep = verify_individual_2(grid, B, M, ghat, S, {0, 0}, "ii");
        CHECK(rep.classified);
        CHECK(rep.pass());
    }

    SECTION("constant obstacle on the regular disk") {
        auto rep = verify_individual_2(grid, B, M, ScalarField(grid, 1.0), S, {0, 0}, "ii");
        CHECK(rep.classified);
        CHECK(rep.pass());
    }

    SECTION("zero obstacle is trivially finite") {
        auto rep = verify_individual_2(grid, B, M, ScalarField(grid, 0.0), S, {0, 0}, "ii");
        CHECK(rep.classified);
        CHECK(rep.pass());
        CHECK(rep.uniform.lhs == 0.0);
    }
}

TEST_CASE("proof chain ladder") {
    auto grid = unit_grid(1.0 / 256);
    auto S = ClosedBallUnion::ball({0, 0}, 0.5);
    auto dtilde = ModelDomain::disk({0, 0}, 1.0);
    auto v = unit_green_tf(grid, S);
    auto vt = extend_test(v, S, {0, 0}, dtilde, 1.0).v_tilde;

    SECTION("harmonic equality case") {
        auto uf = ScalarField::sample(grid, [](Point z) { return 1.0 + 0.5 * z.real(); });
        MajorantSpec M;
        M.u1 = uf;
        M.u2 = ScalarField(grid, 0.0);
        M.charge = RieszCharge(grid);
        M.dom_mask.assign(grid->size(), 1);
        auto rep = proof_chain_check(grid, uf, M, vt, {0, 0}, {4, 16});
        CHECK(rep.pass());
        for (const auto& s : rep.steps) {
            CHECK(s.pj_u <= 1e-3);
            CHECK(std::abs(s.margin) <= 1e-9);
        }
    }

    SECTION("log pole with a quadratic cushion") {
        auto u = ScalarField::sample(
            grid, [](Point z) { return std::log(std::abs(z - Point(0.5, 0.0))); },
            {Marker{{0.5, 0.0}, -1, -1}});
        auto u1 = ScalarField::sample(
            grid,
            [](Point z) { return std::log(std::abs(z - Point(0.5, 0.0))) + 0.1 * std::norm(z); },
            {Marker{{0.5, 0.0}, -1, -1}});
        auto M = make_delta_sbh(u1, ScalarField(grid, 0.0));
        auto rep = proof_chain_check(grid, u, M, vt, {0, 0}, {4, 16, 64});
        CHECK(rep.residuals_ok);
        for (const auto& s : rep.steps) {
            CHECK(s.pj_u <= 5e-3);
            CHECK(s.pj_u1 <= 5e-3);
            CHECK(s.pj_u2 <= 5e-3);
            CHECK(s.margin >= -1e-3);
        }
        CHECK(rep.margins_monotone);
        CHECK(rep.limit_margin >= rep.steps.back().margin - 1e-3);
        CHECK(rep.pass());
    }
}
