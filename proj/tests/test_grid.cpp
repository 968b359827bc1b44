#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "nlab/grid_function.hpp"

using namespace nlab;

namespace {

GridFunction sampled_cos(double X = 4.0, double h = 1.0 / 64.0) {
    TailFormula cos_tail = TailFormula::of(TailAtom::trig(1.0, 0.0, 1.0));
    return GridFunction::sample(
        X, h, [](double x) { return std::cos(x); },
        TailSpec::uniform(X, cos_tail));
}

}  // namespace

TEST_CASE("tail atoms evaluate, shift and reflect consistently") {
    TailAtom p = TailAtom::poly({1.0, -2.0, 0.5, 0.25});
    auto ref = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x + 0.25 * x * x * x; };
    CHECK(p.eval(1.7) == doctest::Approx(ref(1.7)).epsilon(1e-15));
    CHECK(p.shifted(0.3).eval(1.4) == doctest::Approx(ref(1.7)).epsilon(1e-14));
    CHECK(p.reflected().eval(-1.7) == doctest::Approx(ref(1.7)).epsilon(1e-15));

    TailAtom t = TailAtom::trig(2.0, -1.0, 3.0);
    auto tref = [](double x) { return 2.0 * std::cos(3.0 * x) - std::sin(3.0 * x); };
    CHECK(t.shifted(-0.4).eval(0.9) == doctest::Approx(tref(0.5)).epsilon(1e-14));
    CHECK(t.reflected().eval(-0.9) == doctest::Approx(tref(0.9)).epsilon(1e-14));

    TailAtom s = TailAtom::sign_sin(2.0, 3.0, 0.25);
    CHECK(s.eval(0.1) == 2.0);
    CHECK(s.shifted(0.2).eval(-0.1) == s.eval(0.1));
    CHECK(s.reflected().eval(-0.1) == s.eval(0.1));

    CHECK_THROWS_AS(TailAtom::power(1.0, 0.5).shifted(1.0), Error);
}

TEST_CASE("square wave tails are exact on the lattice") {
    TailAtom s = TailAtom::sign_sin(1.0, 2.0, 0.0);  // sign(sin(2 pi x))
    CHECK(s.eval(0.25) == 1.0);
    CHECK(s.eval(0.75) == -1.0);
    CHECK(s.eval(0.5) == 0.0);   // lattice point, exactly zero
    CHECK(s.eval(13.0) == 0.0);  // stays exact far out
    CHECK(s.eval(-0.25) == -1.0);
}

TEST_CASE("tail spec validation catches bad tilings") {
    TailSpec good = TailSpec::constant(2.0, 1.0);
    CHECK_NOTHROW(good.validate(2.0));
    CHECK_THROWS_AS(good.validate(1.0), ConfigError);

    TailSpec gap;
    gap.pieces.push_back({-std::numeric_limits<double>::infinity(), -2.0,
                          TailFormula::of(TailAtom::constant(1.0))});
    gap.pieces.push_back({3.0, std::numeric_limits<double>::infinity(),
                          TailFormula::of(TailAtom::constant(1.0))});
    CHECK_THROWS_AS(gap.validate(2.0), ConfigError);
}

TEST_CASE("grid sampling and cubic evaluation") {
    GridFunction u = sampled_cos();
    CHECK(u.size() == 513);
    CHECK(u.eval(0.0) == 1.0);  // node hit is exact

    // mid-cell cubic error is fourth order; h = 1/64
    CHECK(std::abs(u.eval(0.3) - std::cos(0.3)) < 1e-7);
    CHECK(std::abs(u.eval(-2.512) - std::cos(-2.512)) < 1e-7);

    // outside the window the analytic tail takes over, exactly
    CHECK(u.eval(10.0) == doctest::Approx(std::cos(10.0)).epsilon(1e-15));
    CHECK(u.eval(-117.3) == doctest::Approx(std::cos(-117.3)).epsilon(1e-15));
}

TEST_CASE("second differences match closed forms") {
    GridFunction u = sampled_cos();
    // 0.5 (cos(x+y) + cos(x-y)) - cos(x), frozen references
    CHECK(second_difference(u, 0.0, 1.0) ==
          doctest::Approx(-0.45969769413186028).epsilon(1e-8));
    CHECK(second_difference(u, 0.3, 0.7) ==
          doctest::Approx(-0.22465483919009362).epsilon(1e-8));
    // large y reaches into the tail on both sides
    CHECK(second_difference(u, 0.0, 20.0) ==
          doctest::Approx(std::cos(20.0) - 1.0).epsilon(1e-12));
    CHECK_THROWS_AS(second_difference(u, 5.0, 1.0), OutOfDomain);
}

TEST_CASE("curvature from the local cubic") {
    double h = 1.0 / 64.0;
    GridFunction q = GridFunction::sample(
        4.0, h, [](double x) { return x * x; }, TailSpec::zero(4.0));
    // cubics reproduce quadratics exactly
    CHECK(q.curvature(0.0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(q.curvature(1.37) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(q.curvature(-3.999) == doctest::Approx(2.0).epsilon(1e-7));

    GridFunction u = sampled_cos();
    CHECK(u.curvature(0.1) == doctest::Approx(-std::cos(0.1)).epsilon(2e-3));
    CHECK_THROWS_AS(u.curvature(4.5), OutOfDomain);
}

TEST_CASE("finite difference derivatives on the lattice") {
    double h = 1.0 / 64.0;
    GridFunction c = GridFunction::sample(
        2.0, h, [](double x) { return x * x * x; }, TailSpec::zero(2.0));
    // central first difference of x^3 is 3x^2 + h^2 exactly
    CHECK(finite_diff_derivative(c, 0.5, 1) ==
          doctest::Approx(0.75 + h * h).epsilon(1e-12));
    // central second difference of x^3 is 6x exactly
    CHECK(finite_diff_derivative(c, 0.5, 2) ==
          doctest::Approx(3.0).epsilon(1e-9));
    CHECK_THROWS_AS(finite_diff_derivative(c, -2.0, 1), OutOfStencil);
    CHECK_THROWS_AS(finite_diff_derivative(c, 0.5 + h / 3.0, 1), OutOfDomain);
}

TEST_CASE("combining shifted copies keeps an exact tail") {
    GridFunction u = sampled_cos();
    double d = 0.25;
    GridFunction w = combine_shifts(u, {{d, 1.0}, {-d, 1.0}, {0.0, -2.0}});
    // cos(x+d) + cos(x-d) - 2cos(x) = 2 cos(x)(cos d - 1)
    double factor = 2.0 * (std::cos(d) - 1.0);
    CHECK(w.halfwidth() == doctest::Approx(4.25));
    CHECK(w.eval(0.0) == doctest::Approx(factor).epsilon(1e-13));
    CHECK(w.eval(10.0) == doctest::Approx(factor * std::cos(10.0)).epsilon(1e-13));
    CHECK(w.eval(-50.0) == doctest::Approx(factor * std::cos(-50.0)).epsilon(1e-13));
    CHECK(w.tail().growth() == doctest::Approx(0.0));
}

TEST_CASE("weighted tail norm") {
    double h = 1.0 / 64.0;
    GridFunction one = GridFunction::sample(
        4.0, h, [](double) { return 1.0; }, TailSpec::constant(4.0, 1.0));
    // int_R (1 + |y|)^-2 dy = 2
    CHECK(weighted_l1_norm(one, 1.0) == doctest::Approx(2.0).epsilon(1e-8));

    GridFunction cw = GridFunction::sample(
        4.0, h, [](double x) { return std::cos(x); }, TailSpec::zero(4.0));
    // int_{-4}^{4} |cos y| (1+|y|)^-1.5 dy
    CHECK(weighted_l1_norm(cw, 0.5) ==
          doctest::Approx(1.5889992567394912).epsilon(1e-6));

    GridFunction grow = GridFunction::sample(
        4.0, h, [](double x) { return x * x; },
        TailSpec::uniform(4.0, TailFormula::of(TailAtom::poly({0, 0, 1, 0}))));
    CHECK_THROWS_AS(weighted_l1_norm(grow, 1.0), DivergentTail);
}
