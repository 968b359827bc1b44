// Checkers for the global rigidity statement on concretely given functions:
// the split positive/negative kernel masses of a second-difference increment,
// their comparability under the ellipticity pinch, the three hypotheses the
// statement needs (growth envelope, signed translation differences, averaged
// differences), and the distance of the function from a low-degree polynomial.
//
// Every check runs on finite samples of shifts, measures, and points.  A pass
// certifies "not falsified on the sample", never the universally quantified
// hypothesis; reports carry that disclaimer explicitly.

#ifndef NLAB_LIOUVILLE_HPP
#define NLAB_LIOUVILLE_HPP

#include <string>
#include <vector>

#include "nlab/grid_function.hpp"
#include "nlab/holder.hpp"
#include "nlab/operators.hpp"
#include "nlab/types.hpp"

namespace nlab {

struct LiouvilleInput {
    // Window halfwidth must be at least 8 so interior sample points keep a
    // useful distance from the sampled-data boundary.  The tail must be exact:
    // polynomial pieces of degree <= 2 cancel exactly inside the split masses,
    // bounded pieces are integrated out with a periodic-mean far field.
    GridFunction u;
    HolderExponents exps;
    double c1 = 1.0;  // growth-envelope constant
    EllipticityParams bounds;
    QuadratureConfig quad;
};

// Positive and negative kernel masses of d(y) = d2u(x,y) - d2u(base,y):
//   positive = int (d)^+ (2-sigma)|y|^{-1-sigma} dy,  negative likewise.
// Both are nonnegative; they scale linearly in u and swap when u flips sign
// or when x and base trade places.
struct SplitMass {
    double positive = 0.0;
    double negative = 0.0;
};

SplitMass compute_P_N(const LiouvilleInput& inp, double x, double base = 0.0);

struct ComparabilityPoint {
    double x = 0.0;
    double positive = 0.0;
    double negative = 0.0;
    // Signed-difference checks at the shift connecting base to x.  Without
    // them the pinch inequality is not claimed at this point.
    bool hypothesis_ok = false;
    bool skipped = false;  // combined mass below the quadrature floor
    bool comparable = false;
};

struct ComparabilityReport {
    std::vector<ComparabilityPoint> points;
    bool all_pass = true;  // every verified, non-skipped point is comparable
    std::string note;
};

// At each point x checks lambda/Lambda * P <= N <= Lambda/lambda * P, gated
// on the translation-difference sign checks for the shift h = x - base.
ComparabilityReport check_comparability(const LiouvilleInput& inp,
                                        const std::vector<double>& points);

struct HypothesisReport {
    GrowthReport growth;          // envelope check per radius and derivative
    double worst_minus = 0.0;     // largest M^- of a translation difference
    double worst_plus = 0.0;      // smallest M^+ of a translation difference
    double worst_average = 0.0;   // smallest M^+ over the discrete measures
    bool pass_growth = false;
    bool pass_translation = false;  // wants worst_minus <= 0 <= worst_plus
    bool pass_average = false;      // wants worst_average >= 0
    bool all_pass = false;
    std::string note;
};

// Samples the three hypotheses: the growth envelope at the given radii, the
// translation-difference sign condition at the given shifts, and the averaged
// difference against each discrete measure; interior sample points are fixed.
HypothesisReport check_hypotheses(const LiouvilleInput& inp,
                                  const std::vector<double>& shifts,
                                  const std::vector<std::vector<ShiftAtom>>& measures,
                                  const std::vector<double>& radii);

// Relative sup distance of u from its own best L2 polynomial of degree
// exps.nu() over the widest centered ball: near zero means u already has the
// polynomial shape the rigidity statement concludes.
double polynomial_conclusion_residual(const LiouvilleInput& inp);

}  // namespace nlab

#endif  // NLAB_LIOUVILLE_HPP
