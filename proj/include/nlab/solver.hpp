// Dirichlet solvers on the unit ball (-1, 1).
//
// The discretization is a monotone quadrature scheme on a uniform lattice
// with h = 1/resolution: the first kernel cell uses a curvature stencil
// (which absorbs the singularity), every further cell integrates the kernel
// exactly against the piecewise-linear interpolant, and once both arguments
// of the second difference leave the window the remaining tail collapses to
// closed-form integrals of the exterior data.  All off-diagonal weights are
// nonnegative and every diagonal carries the full tail mass, so the systems
// are strictly diagonally dominant M-matrices and inherit the comparison and
// maximum principles of the continuum operators.

#ifndef NLAB_SOLVER_HPP
#define NLAB_SOLVER_HPP

#include <optional>
#include <vector>

#include "nlab/grid_function.hpp"
#include "nlab/kernels.hpp"
#include "nlab/operators.hpp"
#include "nlab/tail.hpp"
#include "nlab/types.hpp"

namespace nlab {

struct DirichletProblem {
    // Explicit kernels with their running costs.  The linear solver uses
    // exactly one member; the Bellman solver minimizes over all of them.
    // When `extremal` is set the solver instead runs the sign-split extremal
    // operator built from `family.bounds`; the family then only carries the
    // order (members[0].kernel.sigma) and the cost, and is not certified.
    OperatorFamily family;
    std::optional<ExtremalSign> extremal;

    // Exterior data on R \ (-1, 1); must be bounded and tile halfwidth 1.
    TailSpec exterior = TailSpec::zero(1.0);

    int resolution = 64;  // cells per unit length, h = 1/resolution
    QuadratureConfig quad;
    double tolerance = 1e-10;  // target for the discrete residual
    int max_iterations = 60;
    int threads = 1;
};

struct SolveReport {
    GridFunction solution;  // window [-1,1] with the problem's exterior tail
    double residual = 0.0;  // sup norm of the discrete equation on interior nodes
    int iterations = 0;
    // Bellman case: number of nodes (finite family) or panels (extremal)
    // whose selection changed, one entry per policy sweep.
    std::vector<int> policy_trace;
    // Fixed-point case: successive-iterate distance ratios.
    std::vector<double> contraction_factors;
    // Residual after each pass (ball sweeps) or policy sweep.
    std::vector<double> residual_trace;
    // Worst pointwise violation of Howard monotonicity across iterations
    // (the inf problem must descend, the sup problem must ascend).
    double howard_defect = 0.0;
};

// Direct solve of the linear problem L u + c = 0 in (-1,1), u = g outside.
SolveReport solve_linear_dirichlet(const DirichletProblem& p);

// Howard policy iteration for inf_a (L_a u + c_a) = 0 over the finite family,
// or for the extremal problem when p.extremal is set.  The extremal policy is
// the sign pattern of the second difference frozen per quadrature panel; its
// deep tail resolves the optimal sign pattern exactly at each evaluation.
SolveReport solve_bellman_dirichlet(const DirichletProblem& p);

// Small-ball fixed point: repeatedly solves the flat-order problem whose
// right side collects the mollified-kernel deviation plus delta^sigma times
// the mollified cost (the problem rescaled from B_delta(center) to the unit
// ball).  p supplies the base kernel, the rescaled exterior data (zero or
// constant), and the grid.  Reports the per-step contraction factors; throws
// NoContraction when the map expands or the ball outgrows the mollification
// scale.
SolveReport solve_contraction(const DirichletProblem& p, const MollifierSpec& m,
                              double delta, double center = 0.0);

// Perron-style relaxation: sweeps balls of radius delta over the interior,
// replacing u on each ball by the local solve against the current values
// elsewhere.  Records the global residual after every pass.
SolveReport ball_update_sweep(const GridFunction& u0, const DirichletProblem& p,
                              double delta, int passes);

struct BarrierCheck {
    double C = 0.0;          // smallest C with |u| <= C dist(x)^p on the region
    double coarse_C = 0.0;   // same estimate from every second node
    bool pass = false;       // C finite and stable between the two lattices
};

// Fits the boundary-decay envelope |u(x)| <= C dist(x, R \ (-1,1))^{p_exp}
// over region nodes; pass requires the full- and half-resolution estimates
// to agree within 10%.
BarrierCheck barrier_check(const GridFunction& u, double p_exp, double region_a,
                           double region_b);

}  // namespace nlab

#endif  // NLAB_SOLVER_HPP
