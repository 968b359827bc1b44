// Shared value types and error taxonomy for the nonlocal-operator laboratory.
//
// Everything downstream (kernels, operators, solvers, diagnostics) works with
// an operator order sigma in (0,2) and an ellipticity window [lambda, Lambda].
// The exponent bookkeeping for regularity sweeps lives in HolderExponents.

#ifndef NLAB_TYPES_HPP
#define NLAB_TYPES_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace nlab {

// ---------------------------------------------------------------------------
// Errors.  Each names the contract it enforces; the CLI maps a subset of
// these onto process exit codes.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tail grows too fast for the requested order: the defining integral diverges.
class DivergentTail : public Error {
public:
    explicit DivergentTail(const std::string& what) : Error(what) {}
};

// A finite-difference stencil would reach past the last grid node.
class OutOfStencil : public Error {
public:
    explicit OutOfStencil(const std::string& what) : Error(what) {}
};

// Kernel evaluated at y = 0 or another removable-singularity argument.
class SingularArgument : public Error {
public:
    explicit SingularArgument(const std::string& what) : Error(what) {}
};

// Kernel modulation jumps in y where a Holder-in-y bound was requested.
class NonHolderKernel : public Error {
public:
    explicit NonHolderKernel(const std::string& what) : Error(what) {}
};

// Point or region leaves the represented domain.
class OutOfDomain : public Error {
public:
    explicit OutOfDomain(const std::string& what) : Error(what) {}
};

// Discrete averaging measure with negative weights or mass != 1.
class BadMeasure : public Error {
public:
    explicit BadMeasure(const std::string& what) : Error(what) {}
};

// Assembled system lost strict diagonal dominance (scheme bug or bad config).
class NonDominantMatrix : public Error {
public:
    explicit NonDominantMatrix(const std::string& what) : Error(what) {}
};

// Iteration cap hit before the requested tolerance.
class MaxIterations : public Error {
public:
    explicit MaxIterations(const std::string& what) : Error(what) {}
};

// Fixed-point map expanded instead of contracting.
class NoContraction : public Error {
public:
    explicit NoContraction(const std::string& what) : Error(what) {}
};

// sigma + alpha landed on an integer; the exponent split is undefined there.
class IntegerOrder : public Error {
public:
    explicit IntegerOrder(const std::string& what) : Error(what) {}
};

// Malformed configuration or input file.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// ---------------------------------------------------------------------------
// EllipticityParams: the pinching window for kernel bounds.
// ---------------------------------------------------------------------------

struct EllipticityParams {
    double lambda = 1.0;
    double Lambda = 1.0;

    EllipticityParams() = default;
    EllipticityParams(double lam, double Lam) : lambda(lam), Lambda(Lam) {
        if (!(lambda > 0.0) || !(Lambda >= lambda))
            throw ConfigError("ellipticity bounds need 0 < lambda <= Lambda");
    }

    double ratio() const { return Lambda / lambda; }
};

// ---------------------------------------------------------------------------
// HolderExponents: order sigma, increment alpha, and the derived exponents
// used when trading regularity for scaling in the diagnostics.
//
//   nu          = floor(sigma + alpha)   (integer part of the target class)
//   alpha_prime = max(alpha/2, (sigma + alpha + nu)/2 - sigma)
//
// alpha_prime always lands strictly between nu - sigma and alpha, so
// sigma + alpha_prime stays inside (nu, sigma + alpha).
// ---------------------------------------------------------------------------

struct HolderExponents {
    double sigma = 1.0;
    double alpha = 0.1;

    HolderExponents() = default;
    HolderExponents(double s, double a) : sigma(s), alpha(a) {
        if (!(sigma > 0.0) || !(sigma < 2.0))
            throw ConfigError("order sigma must lie in (0,2)");
        if (!(alpha > 0.0) || !(alpha < 1.0))
            throw ConfigError("increment alpha must lie in (0,1)");
        double total = sigma + alpha;
        if (std::abs(total - std::round(total)) < 1e-12)
            throw IntegerOrder("sigma + alpha must not be an integer");
    }

    int nu() const { return static_cast<int>(std::floor(sigma + alpha)); }

    double alpha_prime() const {
        double a1 = alpha / 2.0;
        double a2 = (sigma + alpha + nu()) / 2.0 - sigma;
        return std::max(a1, a2);
    }
};

}  // namespace nlab

#endif  // NLAB_TYPES_HPP
