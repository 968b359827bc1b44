// Kernel families and their certification.
//
// Kernels take the form K(x,y) = b(x,y) (2-sigma) |y|^{-1-sigma} where the
// modulation b is pinched between the ellipticity bounds.  The modulation
// factors as b(x,y) = X(x) Y(y) with Y either constant, a square wave of
// sign(cos(m pi y)) outside a flat core, or a smooth cosine; this covers the
// flat fractional Laplacian, the oscillating-kernel family driving the
// blow-up experiments, and the smooth comparison kernels, while keeping the
// sign-flip breakpoints exactly representable.

#ifndef NLAB_KERNELS_HPP
#define NLAB_KERNELS_HPP

#include <functional>
#include <vector>

#include "nlab/types.hpp"

namespace nlab {

struct KernelSpec {
    enum class YKind { Flat, SignCos, Cos };
    enum class XKind { None, BoundedPower };

    double sigma = 1.0;

    YKind ykind = YKind::Flat;
    double flat_value = 1.0;  // Flat: Y(y) = flat_value

    // SignCos: Y(y) = inner_value for |y| < split,
    //          base + amp * sign(cos(wave * pi * y)) for |y| >= split.
    // Cos:     Y(y) = base + amp * cos(wave * y) everywhere.
    double inner_value = 1.0;
    double split = 1.0;
    double base = 0.0;
    double amp = 0.0;
    double wave = 0.0;

    // Optional x-dependence: X(x) = 1 + min(1, |x|^xalpha).
    XKind xkind = XKind::None;
    double xalpha = 0.0;

    static KernelSpec flat(double sigma, double value = 1.0);
    static KernelSpec sign_cos(double sigma, double m, double base = 2.0,
                               double amp = 1.0, double split = 1.0,
                               double inner = 1.0);
    static KernelSpec cosine(double sigma, double base, double amp, double omega);
    KernelSpec with_x_power(double alpha) const;

    double x_factor(double x) const;
    double y_profile(double y) const;
    double modulation(double x, double y) const { return x_factor(x) * y_profile(y); }

    bool x_dependent() const { return xkind != XKind::None; }
    bool piecewise_const_in_y() const { return ykind != YKind::Cos; }

    // Discontinuity points of the y profile inside [a, b] with 0 < a < b
    // (the negative side mirrors them).
    void append_y_breakpoints(double a, double b, std::vector<double>& out) const;

    // Exact bounds on the y profile (interval arithmetic for piecewise
    // constants, sampling plus a derivative bound for the smooth kind).
    struct Range {
        double lo = 0.0, hi = 0.0;
        double lo_y = 0.0, hi_y = 0.0;  // sample points realizing the bounds
    };
    Range y_range() const;

    double sup_modulation() const;
};

// b(x,y) (2-sigma) |y|^{-1-sigma}
double kernel_eval(const KernelSpec& k, double x, double y);

struct CertResult {
    bool ok = false;
    double lo = 0.0, hi = 0.0;          // measured modulation range
    double witness_x = 0.0, witness_y = 0.0;  // violation point when !ok
    explicit operator bool() const { return ok; }
};

// Certifies lambda <= b(x,y) <= Lambda.
CertResult check_L0(const KernelSpec& k, const EllipticityParams& p);

// Smallest A0 with int_{r<|y|<2r} |K(x,y) - K(x',y)| dy
//   <= A0 |x-x'|^alpha (2-sigma) r^{-sigma}
// for this particular (x, x', r).
double check_x_holder(const KernelSpec& k, double x, double xp, double r,
                      double alpha);

// Normalized y-regularity of the modulation outside B_rho:
//   [Y]_{C^alpha(|y| >= rho)} * rho^alpha / sup Y,
// by brute-force Holder-quotient maximization over sample pairs.  The
// scale-free normalization makes "<= const for all rho" the membership test
// for the smooth kernel class; the power-law factor itself is C^infty and
// contributes nothing.  Square-wave modulations have no finite quotient and
// are rejected.
double check_y_holder_tail(const KernelSpec& k, double rho, double alpha);

// Mollification by a fixed smooth bump.  eta is the normalized
// exp(-1/(1-u^2)) bump on (-1,1); xi is a smooth cutoff, 1 on |u| <= 1/2 and
// 0 on |u| >= 1.
struct MollifierSpec {
    double epsilon;

    explicit MollifierSpec(double eps);

    static double eta(double u);
    static double xi(double u);
    // Mass of eta under the quadrature used throughout; 1 by construction.
    static double eta_mass();
};

// xi(y/4e) (2-sigma)|y|^{-1-sigma} + (1 - xi(y/4e)) (K * eta_e (x) eta_e)(x,y).
// Equals the flat power law exactly for |y| <= 2 epsilon.
double mollify_kernel(const KernelSpec& k, const MollifierSpec& m, double x,
                      double y);

// (c * eta_epsilon)(x)
double mollify_coeff(const std::function<double(double)>& c,
                     const MollifierSpec& m, double x);

// Smallest C >= 1 with lambda/C <= mollified modulation <= C Lambda over a
// sample sweep in x and y.  Reported, not claimed sharp.
double measure_mollified_ellipticity(const KernelSpec& k,
                                     const EllipticityParams& p,
                                     const MollifierSpec& m);

}  // namespace nlab

#endif  // NLAB_KERNELS_HPP
