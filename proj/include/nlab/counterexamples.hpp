#ifndef NLAB_COUNTEREXAMPLES_HPP
#define NLAB_COUNTEREXAMPLES_HPP

#include <vector>

#include "nlab/grid_function.hpp"
#include "nlab/solver.hpp"
#include "nlab/types.hpp"

namespace nlab {

// Family of Dirichlet problems indexed by a frequency m whose solutions stay
// uniformly bounded while their interior smoothness gauges grow with m.  The
// exterior data vanish on the collar (1, 2) and alternate sign with half
// period 1/m beyond it; the linear kind pairs them with a kernel modulated on
// the same lattice, the nonlinear kind runs the plus-side extremal operator
// over the pinched class instead.
struct CounterexampleConfig {
    enum class Kind { Linear, Nonlinear };

    Kind kind = Kind::Linear;
    double sigma = 1.0;
    // Pinching for the nonlinear kind; the linear kernel certifies in (1, 3)
    // regardless of these.
    EllipticityParams bounds{1.0, 2.0};
    std::vector<int> ms = {2, 4, 8, 16, 32};
    // Interior smoothness gauge; sigma + alpha must stay non-integer.
    double alpha = 0.1;
    int resolution = 256;  // cells per unit length, at least 8 per half period
    QuadratureConfig quad;
    double tolerance = 1e-10;
    int max_iterations = 60;
    int threads = 1;

    void validate() const;
};

// Kernel weight 1 below |y| = 1 and 2 + sign cos(m pi y) beyond, zero cost,
// exterior 0 on the collar and sign sin(m pi x) past |x| = 2.
DirichletProblem build_linear(const CounterexampleConfig& cfg, int m);

// Same exterior; plus-side extremal operator with cfg.bounds.
DirichletProblem build_nonlinear(const CounterexampleConfig& cfg, int m);

// u = inner + outer with inner the window values continued by zero and outer
// supported outside (-2, 2), where it equals the oscillating data.  Their sum
// reproduces u everywhere.
struct SplitSolution {
    GridFunction inner;
    GridFunction outer;
};
SplitSolution split_solution(const GridFunction& um, int m);

// The outer part meets the frequency-matched kernel in exact resonance.  Its
// image under the unscaled operator int (u(x+y) + u(x-y) - 2u(x)) W(y) dy / 2
// with W(y) = Y_m(y) |y|^(-1-sigma) vanishes at 0 by odd cancellation and
// approaches the tail mass c = 2^(1-sigma) / sigma at the half-period point
// 1/(2m).  Both values come from closed-form power integrals over the sign
// lattice plus an Euler-Maclaurin lattice sum, not from the panel quadrature,
// so they are good to near machine precision.
struct OscillationReport {
    int m = 0;
    double at_zero = 0.0;   // exact cancellation, 0 to machine precision
    double at_half = 0.0;   // image at 1/(2m)
    double constant = 0.0;  // 2^(1-sigma) / sigma
    double deviation = 0.0; // |at_half - constant|, shrinking in m
};
OscillationReport oscillation_identities(double sigma, const GridFunction& outer,
                                         int m);

// Spot checks of the optimal weight at the plus-side extremal solution: the
// odd exterior data cancel in the centered second difference at 0, so the
// weight is lambda at every generic |y| > 2, while from x = 1/(2m) the weight
// past the collar follows sign cos(m pi y) exactly on the half-period
// lattice.  Probes at 0 use frequency-generic (irrational) offsets so no
// sample lands on a sign-change ordinate of the data.
struct NonlinearReport {
    int m = 0;
    double u_at_zero = 0.0;         // nonnegative up to solver tolerance
    double headroom = 0.0;          // 1 - max u on [-1/2, 1/2]
    bool weight_at_zero_ok = false; // lambda at all probes
    bool weight_at_half_ok = false; // matches the sign cos closed form
};
NonlinearReport nonlinear_identities(const GridFunction& um, int m,
                                     const EllipticityParams& bounds);

// One frequency's diagnostics: uniform bound, smoothness gauges, resonance
// identity values, boundary envelope, and the image-regularity ratio of the
// inner part (alpha/2 image seminorm on (-1/4, 1/4) against the window norms
// that control it, which stays bounded in m).
struct BlowupRow {
    int m = 0;
    double sup_norm = 0.0;
    double calpha = 0.0;        // seminorm of order alpha on (-1, 1)
    double csigma_alpha = 0.0;  // seminorm of order sigma + alpha on (-1/2, 1/2)
    double id_at_zero = 0.0;
    double id_at_half = 0.0;
    double id_deviation = 0.0;
    double claim_ratio = 0.0;
    double barrier_C = 0.0;
    bool barrier_pass = false;
    double residual = 0.0;
    // nonlinear kind only; zero / true for the linear kind
    double u_at_zero = 0.0;
    double headroom = 0.0;
    bool weights_ok = true;
};

struct BlowupReport {
    CounterexampleConfig cfg;
    std::vector<BlowupRow> rows;  // one per frequency, in cfg.ms order
};

// Solves every frequency and assembles the rows.  With cfg.threads > 1 the
// per-frequency solves run in parallel (one solver thread each); the report
// order is cfg.ms order either way.
BlowupReport blowup_sweep(const CounterexampleConfig& cfg);

}  // namespace nlab

#endif  // NLAB_COUNTEREXAMPLES_HPP
