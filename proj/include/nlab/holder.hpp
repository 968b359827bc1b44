// Empirical Holder machinery: pairwise seminorms of non-integer order,
// boundary-weighted (adimensional) variants, growth-control diagnostics, and
// least-squares polynomial fits on balls.
//
// Seminorms of order beta = k + beta' differentiate k times with central
// differences and maximize the beta'-quotient over node pairs.  Coarse
// regions use every pair; fine regions stratify pairs by dyadic gap, which
// covers both touching pairs and scale-extremal pairs.

#ifndef NLAB_HOLDER_HPP
#define NLAB_HOLDER_HPP

#include <array>
#include <vector>

#include "nlab/grid_function.hpp"
#include "nlab/types.hpp"

namespace nlab {

struct SeminormQuery {
    double beta = 0.5;          // > 0, non-integer, < 3
    double a = -1.0, b = 1.0;   // region (a, b)
    int stride = 1;             // node subsampling before pairing
};

struct SeminormEstimate {
    double value = 0.0;
    // scale of the central-difference truncation entering the quotients,
    // (stride h)^2 D^{k+2} / 6 estimated discretely; zero when k = 0
    double derivative_bias = 0.0;
};

SeminormEstimate seminorm_estimate(const GridFunction& u, const SeminormQuery& q);
double seminorm(const GridFunction& u, const SeminormQuery& q);

// sup over pairs of (min distance to the ends of omega)^beta times the
// k-th-derivative beta'-quotient, beta = k + beta'.
double adimensional_seminorm(const GridFunction& u, double beta, double omega_a,
                             double omega_b);

// Exponent bookkeeping for the regularity increment: validates (sigma, alpha)
// and returns the reduced pair (sigma, alpha').  The reduction keeps the
// derivative count nu and lowers the order, and the result is always an
// admissible pair itself.
HolderExponents alpha_prime(double sigma, double alpha);

struct GrowthEntry {
    double beta = 0.0;
    double radius = 0.0;
    double measured = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
    bool pass = false;
};

struct GrowthReport {
    std::vector<GrowthEntry> entries;
    bool all_pass = true;
};

// For each radius R and each beta in {0, 1, ..., floor(s+a')} plus s+a'
// itself, checks [u]_{C^beta(B_R)} <= C1 R^{s+a'-beta}.  Integer beta uses
// sup |D^beta u|, fractional beta the pairwise seminorm.  Takes the original
// (sigma, alpha); the reduction to alpha' happens here.
GrowthReport growth_control_check(const GridFunction& u, const HolderExponents& e,
                                  double C1, const std::vector<double>& radii);

struct PolyFit {
    int degree = 0;
    double center = 0.0;
    double radius = 1.0;
    std::array<double, 3> coef{};  // p(x) = c0 + c1 (x-z) + c2 (x-z)^2

    double eval(double x) const {
        double s = x - center;
        return coef[0] + s * (coef[1] + s * coef[2]);
    }
};

// L2-best polynomial of degree nu in {0,1,2} on (z-r, z+r), assembled in the
// Legendre basis of the rescaled ball so the normal equations are diagonal.
// The residual u - p is L2-orthogonal to every polynomial of degree <= nu.
PolyFit l2_poly_fit(const GridFunction& u, int nu, double z, double r);

// L2 norm of u - fit over the fit's ball.
double l2_residual(const GridFunction& u, const PolyFit& fit);

struct InterpolationReport {
    double lhs = 0.0;      // [u]_{C^beta(B_{1/2})}
    double rhs_sup = 0.0;  // sup over balls of r^{beta'-beta} [u]_{C^beta'(B_r(z))}
    double ratio = 0.0;
    bool pass = false;
};

// Checks the scale-interpolation claim [u]_{C^beta(B_{1/2})} <= S (1 + tol)
// with S the supremum above, over dyadic radii and `samples` centers per
// scale with every ball inside (-1, 1).  Requires floor(beta) < beta' < beta.
InterpolationReport interpolation_claim_check(const GridFunction& u, double beta,
                                              double beta_prime, int samples);

}  // namespace nlab

#endif  // NLAB_HOLDER_HPP
