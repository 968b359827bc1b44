#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "nlab/quadrature.hpp"

using namespace nlab;
using namespace nlab::quad;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("gauss rule integrates smooth functions") {
    double v = gl(0.0, kPi / 2.0, 16, [](double x) { return std::cos(x); });
    CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

    // degree 2n-1 exactness
    double p = gl(0.0, 1.0, 4, [](double x) { return std::pow(x, 7.0); });
    CHECK(p == doctest::Approx(0.125).epsilon(1e-14));
}

TEST_CASE("power integrals in closed form") {
    CHECK(power_integral(-2.0, 1.0, std::numeric_limits<double>::infinity()) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(power_integral(-1.0, 1.0, std::exp(1.0)) ==
          doctest::Approx(1.0).epsilon(1e-13));
    CHECK(power_integral(-1.5, 4.0, std::numeric_limits<double>::infinity()) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(
        power_integral(-1.0, 1.0, std::numeric_limits<double>::infinity()),
        DivergentTail);
    CHECK_THROWS_AS(power_integral(-2.0, 0.0, 1.0), SingularArgument);

    // int_1^2 (3 + 2y) y^-2 dy = 3/2 + 2 ln 2
    CHECK(affine_power_integral(3.0, 2.0, -2.0, 1.0, 2.0) ==
          doctest::Approx(1.5 + 2.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("oscillatory tail integrals against closed-form references") {
    // int_32^inf cos(y) y^-2 dy = cos(32)/32 - (pi/2 - Si(32))
    CHECK(trig_tail_cos(1.0, 0.0, 2.0, 32.0, 1e-13) ==
          doctest::Approx(-0.00048506971992665785).epsilon(1e-10));
    // int_32^inf sin(y) y^-2 dy = sin(32)/32 - Ci(32)
    CHECK(trig_tail_sin(1.0, 0.0, 2.0, 32.0, 1e-13) ==
          doctest::Approx(0.00084326041264414994).epsilon(1e-10));
    // int_8^inf cos(2y + 1/2) y^-1.7 dy, reference from oscillatory
    // Levin-type quadrature
    CHECK(trig_tail_cos(2.0, 0.5, 1.7, 8.0, 1e-12) ==
          doctest::Approx(0.0091526286126834517).epsilon(1e-8));
    CHECK_THROWS_AS(trig_tail_cos(1.0, 0.0, 1.0, 4.0, 1e-10), DivergentTail);
}

TEST_CASE("piecewise far field: constant data") {
    FarProfile prof;
    prof.value = [](double) { return 1.0; };
    // int_4^inf y^-1.5 dy = 1
    CHECK(far_piecewise_integral(prof, 0.5, 4.0, 1e-12) ==
          doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("piecewise far field: square wave") {
    FarProfile prof;
    prof.lattices.push_back({1.0, 0.0, 2.0});
    prof.value = [](double y) {
        double t = std::fmod(y, 2.0);
        if (t < 0.0) t += 2.0;
        return (t < 1.0) ? 1.0 : -1.0;
    };
    // sum_{k>=2} (-1)^k (k^-0.8 - (k+1)^-0.8)/0.8, accelerated alternating sum
    CHECK(far_piecewise_integral(prof, 0.8, 2.0, 1e-12) ==
          doctest::Approx(0.13242687142731078).epsilon(1e-10));
}

TEST_CASE("smooth periodic far field") {
    auto g = [](double y) {
        double c = std::cos(kPi * y);
        return c * c;
    };
    // int_2^inf cos(pi y)^2 y^-2 dy
    CHECK(far_periodic_smooth_integral(g, 1.0, {}, 1.0, 2.0, 1e-12) ==
          doctest::Approx(0.25296054372300263).epsilon(1e-9));
}
