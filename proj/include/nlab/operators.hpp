// Pointwise evaluation of the integro-differential operators.
//
// Every operator here is an integral of the symmetric second difference
// against a kernel.  Evaluation splits |y| into three zones: a near-origin
// zone handled by a Taylor second-moment correction (which removes the
// kernel singularity), a mid zone integrated panel-by-panel with panels
// aligned to the interpolation lattice and to kernel/tail breakpoints, and
// the far zone where both arguments live in the analytic tail and piece sums
// have closed forms with a rigorously bounded periodic remainder.

#ifndef NLAB_OPERATORS_HPP
#define NLAB_OPERATORS_HPP

#include <functional>
#include <vector>

#include "nlab/grid_function.hpp"
#include "nlab/kernels.hpp"
#include "nlab/types.hpp"

namespace nlab {

struct QuadratureConfig {
    // Inner cutoff radius.  0 means automatic (4h).  Must stay >= 2h so the
    // curvature stencil can resolve the Taylor correction.
    double r0 = 0.0;
    // Extra subdivision of each mid-zone lattice panel.
    int mid_panels = 1;
    // Far-field remainder tolerance.
    double tol = 1e-10;
};

enum class ExtremalSign { Plus, Minus };

// int of d2u(x,y) K(x,y) dy over the whole line.
double linear_apply(const GridFunction& u, const KernelSpec& k, double x,
                    const QuadratureConfig& cfg = {});

// Extremal operator of the rough-kernel class with order sigma: the minus
// sign weights positive second differences by lambda and negative ones by
// Lambda; the plus sign swaps them.
double extremal_apply(const GridFunction& u, ExtremalSign sign,
                      const EllipticityParams& p, double sigma, double x,
                      const QuadratureConfig& cfg = {});

struct FamilyMember {
    KernelSpec kernel;
    std::function<double(double)> cost;  // c_a(x)
    double cost_holder = 0.0;            // declared Holder bound of the cost
};

struct OperatorFamily {
    std::vector<FamilyMember> members;
    EllipticityParams bounds{1.0, 1.0};
    double x_holder_A0 = 0.0;   // declared sup of per-kernel x-regularity
    double cost_holder_C0 = 0.0;

    // Checks the members certify against `bounds` and share one order.
    void validate() const;
    double sigma() const;
};

struct BellmanResult {
    double value = 0.0;
    int argmin = -1;
};

// inf over the family of linear_apply + cost, lowest index on ties.
BellmanResult bellman_apply(const GridFunction& u, const OperatorFamily& F,
                            double x, const QuadratureConfig& cfg = {});

// Extremal operator applied to the translation difference u(.+h) - u.
double translation_difference_apply(const GridFunction& u, double h,
                                    ExtremalSign sign,
                                    const EllipticityParams& p, double sigma,
                                    double x, const QuadratureConfig& cfg = {});

// M+ applied to sum_j w_j u(.+h_j) - u for a normalized nonnegative discrete
// measure given as shift atoms.
double average_difference_apply(const GridFunction& u,
                                const std::vector<ShiftAtom>& mu,
                                const EllipticityParams& p, double sigma,
                                double x, const QuadratureConfig& cfg = {});

}  // namespace nlab

#endif  // NLAB_OPERATORS_HPP
