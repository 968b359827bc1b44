#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "nlab/operators.hpp"
#include "nlab/solver.hpp"

using namespace nlab;

namespace {

DirichletProblem linear_problem(KernelSpec k, EllipticityParams bounds,
                                TailSpec exterior, int resolution) {
    DirichletProblem p{
        .family = OperatorFamily{{FamilyMember{k, {}, 0.0}}, bounds, 0.0, 0.0},
        .extremal = {},
        .exterior = std::move(exterior),
        .resolution = resolution,
        .quad = {},
        .tolerance = 1e-10,
        .max_iterations = 60,
        .threads = 2,
    };
    return p;
}

TailSpec sine_tail(double omega) {
    return TailSpec::uniform(1.0, TailFormula::of(TailAtom::trig(0.0, 1.0, omega)));
}

double sup_interior(const GridFunction& u) {
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s = std::max(s, std::abs(u.value(i)));
    return s;
}

}  // namespace

TEST_CASE("constant exterior data propagates exactly") {
    for (const KernelSpec& k :
         {KernelSpec::flat(1.5), KernelSpec::sign_cos(0.8, 3.0)}) {
        DirichletProblem p = linear_problem(k, EllipticityParams{1.0, 3.0},
                                            TailSpec::constant(1.0, 3.2), 16);
        SolveReport rep = solve_linear_dirichlet(p);
        CHECK(rep.residual <= 1e-9);
        for (int i = 0; i < rep.solution.size(); ++i)
            CHECK(rep.solution.value(i) == doctest::Approx(3.2).epsilon(1e-8));
    }
}

TEST_CASE("odd data gives an odd solution") {
    DirichletProblem p = linear_problem(KernelSpec::flat(1.5),
                                        EllipticityParams{1.0, 1.0}, sine_tail(3.0), 16);
    SolveReport rep = solve_linear_dirichlet(p);
    const GridFunction& u = rep.solution;
    int last = u.size() - 1;
    CHECK(std::abs(u.value(last / 2)) <= 1e-8);
    for (int i = 0; i <= last; ++i)
        CHECK(u.value(i) == doctest::Approx(-u.value(last - i)).epsilon(1e-7).scale(1.0));
}

TEST_CASE("discrete maximum principle for oscillating data") {
    DirichletProblem p =
        linear_problem(KernelSpec::sign_cos(1.0, 2.0), EllipticityParams{1.0, 3.0},
                       TailSpec::sign_sin_with_collar(1.0, 2.0, 3.0), 16);
    SolveReport rep = solve_linear_dirichlet(p);
    CHECK(sup_interior(rep.solution) <= 1.0 + 1e-9);
}

TEST_CASE("larger running cost lifts the solution") {
    KernelSpec k = KernelSpec::sign_cos(1.0, 2.0);
    DirichletProblem p = linear_problem(k, EllipticityParams{1.0, 3.0}, sine_tail(2.0), 16);
    SolveReport low = solve_linear_dirichlet(p);
    p.family.members[0].cost = [](double x) { return 0.2 + 0.1 * std::cos(x); };
    SolveReport high = solve_linear_dirichlet(p);
    bool strict = false;
    for (int i = 1; i + 1 < high.solution.size(); ++i) {
        CHECK(high.solution.value(i) >= low.solution.value(i) - 1e-12);
        if (high.solution.value(i) > low.solution.value(i) + 1e-4) strict = true;
    }
    CHECK(strict);
}

TEST_CASE("family of one reproduces the linear solve") {
    KernelSpec k = KernelSpec::sign_cos(1.2, 2.0);
    DirichletProblem p = linear_problem(k, EllipticityParams{1.0, 3.0}, sine_tail(2.0), 16);
    p.family.members[0].cost = [](double x) { return 0.3 - 0.2 * x * x; };
    SolveReport lin = solve_linear_dirichlet(p);
    SolveReport bel = solve_bellman_dirichlet(p);
    CHECK(bel.iterations == 1);
    CHECK(bel.policy_trace == std::vector<int>{0});
    CHECK(bel.howard_defect == 0.0);
    for (int i = 0; i < lin.solution.size(); ++i)
        CHECK(bel.solution.value(i) ==
              doctest::Approx(lin.solution.value(i)).epsilon(1e-12).scale(1.0));
}

TEST_CASE("bellman value sits under every fixed-member solution") {
    FamilyMember cheap{KernelSpec::flat(1.2, 1.0), {}, 0.0};
    FamilyMember dear{KernelSpec::flat(1.2, 2.0),
                      [](double x) { return 0.4 - 0.8 * x * x; }, 0.0};
    DirichletProblem p{
        .family = OperatorFamily{{cheap, dear}, EllipticityParams{1.0, 2.0}, 0.0, 0.0},
        .extremal = {},
        .exterior = sine_tail(2.0),
        .resolution = 16,
        .quad = {},
        .tolerance = 1e-10,
        .max_iterations = 60,
        .threads = 2,
    };
    SolveReport bel = solve_bellman_dirichlet(p);
    CHECK(bel.residual <= 1e-10);
    CHECK(bel.howard_defect <= 1e-10);
    CHECK(bel.policy_trace.back() == 0);

    DirichletProblem pa = p, pb = p;
    pa.family.members = {cheap};
    pb.family.members = {dear};
    SolveReport ua = solve_linear_dirichlet(pa);
    SolveReport ub = solve_linear_dirichlet(pb);
    double gap_a = 0.0, gap_b = 0.0;
    for (int i = 0; i < bel.solution.size(); ++i) {
        CHECK(bel.solution.value(i) <= ua.solution.value(i) + 1e-10);
        CHECK(bel.solution.value(i) <= ub.solution.value(i) + 1e-10);
        gap_a = std::max(gap_a, ua.solution.value(i) - bel.solution.value(i));
        gap_b = std::max(gap_b, ub.solution.value(i) - bel.solution.value(i));
    }
    // The sign change of the second cost forces a genuinely mixed policy.
    CHECK(gap_a > 1e-4);
    CHECK(gap_b > 1e-4);

    DirichletProblem ps = p;
    ps.family.members = {dear, cheap};
    SolveReport swapped = solve_bellman_dirichlet(ps);
    for (int i = 0; i < bel.solution.size(); ++i)
        CHECK(swapped.solution.value(i) ==
              doctest::Approx(bel.solution.value(i)).epsilon(1e-9).scale(1.0));
}

TEST_CASE("extremal solve with collapsed bounds matches the linear one") {
    KernelSpec k = KernelSpec::flat(1.5);
    DirichletProblem p = linear_problem(k, EllipticityParams{1.0, 1.0}, sine_tail(3.0), 16);
    SolveReport lin = solve_linear_dirichlet(p);
    p.extremal = ExtremalSign::Minus;
    SolveReport ext = solve_bellman_dirichlet(p);
    CHECK(ext.residual <= 1e-9);
    for (int i = 0; i < lin.solution.size(); ++i)
        CHECK(ext.solution.value(i) ==
              doctest::Approx(lin.solution.value(i)).epsilon(1e-7).scale(1.0));
}

TEST_CASE("extremal envelopes order and stay inside the data bounds") {
    DirichletProblem p =
        linear_problem(KernelSpec::flat(1.0), EllipticityParams{1.0, 2.0},
                       TailSpec::sign_sin_with_collar(1.0, 2.0, 3.0), 16);
    p.extremal = ExtremalSign::Minus;
    SolveReport lo = solve_bellman_dirichlet(p);
    p.extremal = ExtremalSign::Plus;
    SolveReport hi = solve_bellman_dirichlet(p);
    CHECK(lo.residual <= 1e-10);
    CHECK(hi.residual <= 1e-10);
    CHECK(lo.policy_trace.back() == 0);
    CHECK(hi.policy_trace.back() == 0);
    double gap = 0.0;
    for (int i = 0; i < lo.solution.size(); ++i) {
        CHECK(lo.solution.value(i) <= hi.solution.value(i) + 1e-9);
        gap = std::max(gap, hi.solution.value(i) - lo.solution.value(i));
    }
    CHECK(gap > 1e-3);
    CHECK(sup_interior(lo.solution) <= 1.0 + 1e-9);
    CHECK(sup_interior(hi.solution) <= 1.0 + 1e-9);
}

TEST_CASE("solutions satisfy the continuum operators away from the boundary") {
    // The grid solution, evaluated back through the adaptive quadrature of the
    // continuum operator, must satisfy the equation up to the discretization
    // error, and that error must shrink under refinement.  Budgets pin the
    // measured first-order behavior (1.2e-2 at 32 cells, halving per level)
    // with a factor-two margin.
    KernelSpec k = KernelSpec::sign_cos(1.2, 2.0);
    auto cost = [](double x) { return 0.3 - 0.2 * x * x; };
    std::vector<double> lin_defect;
    for (int res : {16, 32}) {
        DirichletProblem p =
            linear_problem(k, EllipticityParams{1.0, 3.0}, sine_tail(2.0), res);
        p.family.members[0].cost = cost;
        SolveReport lin = solve_linear_dirichlet(p);
        double worst = 0.0;
        for (double x : {0.0, -0.3, 0.3, 0.55})
            worst = std::max(worst, std::abs(linear_apply(lin.solution, k, x) + cost(x)));
        lin_defect.push_back(worst);
    }
    CHECK(lin_defect[1] <= 2.5e-2);
    CHECK(lin_defect[0] > 1.5 * lin_defect[1]);

    std::vector<double> ext_defect;
    for (int res : {16, 32}) {
        DirichletProblem q = linear_problem(KernelSpec::flat(1.0),
                                            EllipticityParams{1.0, 2.0},
                                            sine_tail(2.0), res);
        q.extremal = ExtremalSign::Minus;
        SolveReport ext = solve_bellman_dirichlet(q);
        double worst = 0.0;
        for (double x : {0.0, -0.3, 0.3})
            worst = std::max(worst,
                             std::abs(extremal_apply(ext.solution, ExtremalSign::Minus,
                                                     EllipticityParams{1.0, 2.0}, 1.0, x)));
        ext_defect.push_back(worst);
    }
    CHECK(ext_defect[1] <= 1e-2);
    CHECK(ext_defect[0] > 1.5 * ext_defect[1]);
}

TEST_CASE("contraction trivia: zero problem closes in one sweep") {
    DirichletProblem p = linear_problem(KernelSpec::flat(1.0),
                                        EllipticityParams{1.0, 1.0},
                                        TailSpec::zero(1.0), 16);
    SolveReport rep = solve_contraction(p, MollifierSpec(0.1), 0.05);
    CHECK(rep.iterations == 1);
    CHECK(sup_interior(rep.solution) == 0.0);
}

TEST_CASE("contraction trivia: flat kernel with cost closes in two sweeps") {
    DirichletProblem p = linear_problem(KernelSpec::flat(1.0),
                                        EllipticityParams{1.0, 1.0},
                                        TailSpec::zero(1.0), 16);
    p.family.members[0].cost = [](double) { return 1.0; };
    SolveReport rep = solve_contraction(p, MollifierSpec(0.1), 0.05);
    CHECK(rep.iterations == 2);
    REQUIRE(rep.contraction_factors.size() == 1);
    CHECK(rep.contraction_factors[0] == 0.0);
    CHECK(rep.residual <= 1e-12);
    CHECK(sup_interior(rep.solution) > 0.0);
}

TEST_CASE("contraction factors shrink with the ball radius") {
    DirichletProblem p =
        linear_problem(KernelSpec::sign_cos(1.0, 2.0), EllipticityParams{1.0, 3.0},
                       TailSpec::zero(1.0), 16);
    p.family.members[0].cost = [](double) { return 1.0; };
    MollifierSpec mol(0.1);
    std::vector<double> worst;
    for (double delta : {0.02, 0.01, 0.005}) {
        SolveReport rep = solve_contraction(p, mol, delta);
        CHECK(rep.residual <= 1e-9);
        REQUIRE(!rep.contraction_factors.empty());
        double w = 0.0;
        for (double f : rep.contraction_factors) w = std::max(w, f);
        CHECK(w < 1.0);
        worst.push_back(w);
    }
    CHECK(worst[1] < worst[0]);
    CHECK(worst[2] < worst[1]);

    CHECK_THROWS_AS(solve_contraction(p, mol, 0.2), NoContraction);
}

TEST_CASE("ball sweeps relax to the direct solution") {
    KernelSpec k = KernelSpec::flat(1.5);
    DirichletProblem p = linear_problem(k, EllipticityParams{1.0, 1.0}, sine_tail(2.0), 16);
    p.tolerance = 1e-9;
    SolveReport direct = solve_linear_dirichlet(p);

    GridFunction seed(1.0, 1.0 / 16, std::vector<double>(33, 0.0), p.exterior);
    SolveReport swept = ball_update_sweep(seed, p, 0.2, 200);
    CHECK(swept.iterations < 200);
    CHECK(swept.residual <= 1e-9);
    CHECK(swept.residual_trace.back() < 1e-3 * swept.residual_trace.front());
    for (int i = 0; i < direct.solution.size(); ++i)
        CHECK(swept.solution.value(i) ==
              doctest::Approx(direct.solution.value(i)).epsilon(1e-6).scale(1.0));

    SolveReport stay = ball_update_sweep(direct.solution, p, 0.2, 1);
    for (int i = 0; i < direct.solution.size(); ++i)
        CHECK(stay.solution.value(i) ==
              doctest::Approx(direct.solution.value(i)).epsilon(1e-9).scale(1.0));
}

TEST_CASE("barrier fit accepts the matching exponent and rejects a wrong one") {
    int n = 32;
    double h = 1.0 / n;
    std::vector<double> exact(static_cast<size_t>(2 * n + 1));
    std::vector<double> wrong(exact.size());
    for (int i = 0; i <= 2 * n; ++i) {
        double d = 1.0 - std::abs(-1.0 + h * i);
        exact[static_cast<size_t>(i)] = std::pow(d, 0.7);
        wrong[static_cast<size_t>(i)] = std::pow(d, 0.3);
    }
    GridFunction ue(1.0, h, exact, TailSpec::zero(1.0));
    BarrierCheck be = barrier_check(ue, 0.7, -1.0, 1.0);
    CHECK(be.pass);
    CHECK(be.C == doctest::Approx(1.0).epsilon(1e-9));

    BarrierCheck sub = barrier_check(ue, 0.7, 0.0, 1.0);
    CHECK(sub.pass);

    GridFunction uw(1.0, h, wrong, TailSpec::zero(1.0));
    BarrierCheck bw = barrier_check(uw, 0.7, -1.0, 1.0);
    CHECK(!bw.pass);
    CHECK(bw.C > bw.coarse_C * 1.2);

    GridFunction uz(1.0, h, std::vector<double>(exact.size(), 0.0), TailSpec::zero(1.0));
    BarrierCheck bz = barrier_check(uz, 0.7, -1.0, 1.0);
    CHECK(bz.pass);
    CHECK(bz.C == 0.0);

    CHECK_THROWS_AS(barrier_check(ue, 0.0, -1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(barrier_check(ue, 5.0, -1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(barrier_check(ue, 0.7, 0.5, 0.5), ConfigError);
    CHECK_THROWS_AS(barrier_check(ue, 0.7, 0.98, 1.0), ConfigError);
}

TEST_CASE("solver configuration guards") {
    DirichletProblem p = linear_problem(KernelSpec::flat(1.5),
                                        EllipticityParams{1.0, 1.0},
                                        TailSpec::constant(1.0, 1.0), 16);
    DirichletProblem bad = p;
    bad.resolution = 7;
    CHECK_THROWS_AS(solve_linear_dirichlet(bad), ConfigError);

    bad = p;
    bad.tolerance = 0.0;
    CHECK_THROWS_AS(solve_linear_dirichlet(bad), ConfigError);

    bad = p;
    bad.exterior =
        TailSpec::uniform(1.0, TailFormula::of(TailAtom::power(1.0, 0.5)));
    CHECK_THROWS_AS(solve_linear_dirichlet(bad), ConfigError);

    DirichletProblem low = linear_problem(KernelSpec::flat(0.3),
                                          EllipticityParams{1.0, 1.0},
                                          TailSpec::constant(1.0, 1.0), 16);
    low.exterior = TailSpec::uniform(1.0, TailFormula::of(TailAtom::power(1.0, 0.5)));
    CHECK_THROWS_AS(solve_linear_dirichlet(low), DivergentTail);

    bad = p;
    bad.family.members.push_back(bad.family.members[0]);
    CHECK_THROWS_AS(solve_linear_dirichlet(bad), ConfigError);

    bad = p;
    bad.family.members.clear();
    CHECK_THROWS_AS(solve_bellman_dirichlet(bad), ConfigError);

    bad = p;
    bad.extremal = ExtremalSign::Plus;
    CHECK_THROWS_AS(solve_linear_dirichlet(bad), ConfigError);

    CHECK_THROWS_AS(ball_update_sweep(GridFunction(1.0, 0.5,
                                                   std::vector<double>(5, 0.0),
                                                   TailSpec::constant(1.0, 1.0)),
                                      p, 0.2, 3),
                    ConfigError);
    CHECK_THROWS_AS(solve_contraction(p, MollifierSpec(0.1), -0.1), ConfigError);
}
