// Quadrature toolbox shared by the operator, solver, and diagnostic layers.
//
// Three regimes appear over and over when integrating against kernels
// comparable to |y|^{-1-sigma}:
//   * exact power-law antiderivatives on finite pieces,
//   * Gauss-Legendre panels where the integrand is smooth,
//   * infinite tails, either piecewise constant (square-wave data and
//     modulations; summed exactly piece by piece with a two-term corrected
//     remainder once the pattern turns periodic), smooth periodic, or a
//     single trigonometric mode (integration-by-parts series).

#ifndef NLAB_QUADRATURE_HPP
#define NLAB_QUADRATURE_HPP

#include <functional>
#include <vector>

#include "nlab/types.hpp"

namespace nlab::quad {

// Nodes/weights for n-point Gauss-Legendre on [-1, 1]; cached per n.
struct GlRule {
    std::vector<double> x;
    std::vector<double> w;
};
const GlRule& gl_rule(int n);

// Integrate f over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
double gl(double a, double b, int n, F&& f) {
    const GlRule& r = gl_rule(n);
    double mid = 0.5 * (a + b), rad = 0.5 * (b - a);
    double s = 0.0;
    for (size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(mid + rad * r.x[i]);
    return s * rad;
}

// Exact integral of y^p over [a, b].  a may be 0 when p > -1 (integrable
// endpoint), b may be +infinity when p < -1.  Handles the log case p == -1.
double power_integral(double p, double a, double b);

// Exact integral of (c0 + c1 y) y^p over [a, b].
double affine_power_integral(double c0, double c1, double p, double a, double b);

// --- far-field machinery ----------------------------------------------------

// Breakpoint lattice: points offset + k*step (all integers k); the value
// pattern generated across this lattice repeats with value_period.
struct Lattice {
    double step = 0.0;
    double offset = 0.0;
    double value_period = 0.0;
};

// Piecewise-constant profile on [Y0, inf): finitely many extra edges, then
// periodic structure from the lattices.  value(y) must be exact on the
// interior of every piece (it is called at piece midpoints only).
struct FarProfile {
    std::vector<double> edges;
    std::vector<Lattice> lattices;
    std::function<double(double)> value;
};

// Integral of value(y) * y^{-1-sigma} over [Y0, inf) with absolute error
// below tol: exact piece sums plus a mean-and-drift corrected remainder.
double far_piecewise_integral(const FarProfile& prof, double sigma, double Y0,
                              double tol);

// Same weight, for a bounded g that is periodic with period P beyond Y0
// (smooth inside a period up to the listed edges, given as offsets in [0, P)).
double far_periodic_smooth_integral(const std::function<double(double)>& g,
                                    double P, const std::vector<double>& edge_offsets,
                                    double sigma, double Y0, double tol);

// ∫_Y^inf cos(omega y + phase) y^{-p} dy  (p > 1, omega > 0), by an
// integration-by-parts series; falls back to oscillation-resolving panels
// until the series converges.  Absolute error below tol.
double trig_tail_cos(double omega, double phase, double p, double Y, double tol);
double trig_tail_sin(double omega, double phase, double p, double Y, double tol);

}  // namespace nlab::quad

#endif  // NLAB_QUADRATURE_HPP
