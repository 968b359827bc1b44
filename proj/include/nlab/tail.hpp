// Analytic tail descriptions.
//
// A grid function stores samples on [-X, X] and an exact formula for the
// rest of the line.  Formulas are finite sums of atoms that the quadrature
// layer can integrate against power-law kernels in closed form (or with a
// controlled remainder): constants, low-degree polynomials, a single
// trigonometric mode, square waves sign(sin(m pi x + phase)), and |x|^p
// growth envelopes.  Atoms are closed under shifting and scaling, which is
// what lets translation differences of a grid function keep an exact tail.

#ifndef NLAB_TAIL_HPP
#define NLAB_TAIL_HPP

#include <array>
#include <optional>
#include <vector>

#include "nlab/types.hpp"

namespace nlab {

// sign(sin(pi * t)) evaluated exactly from the half-period coordinate t:
// +1 on (0,1) mod 2, -1 on (1,2) mod 2, 0 on the integer lattice.  fmod is
// exact for these arguments, so lattice hits return exactly 0.
double square_wave(double t);

struct TailAtom {
    enum class Kind { Const, Poly, Trig, SignSin, Power };

    Kind kind = Kind::Const;

    // Const:   coef[0]
    // Poly:    coef[0] + coef[1] x + coef[2] x^2 + coef[3] x^3
    // Trig:    coef[0] cos(freq x) + coef[1] sin(freq x)
    // SignSin: coef[0] * sign(sin(freq * pi * x + phase))
    // Power:   coef[0] * |x|^freq
    std::array<double, 4> coef{};
    double freq = 0.0;
    double phase = 0.0;

    static TailAtom constant(double c);
    static TailAtom poly(std::array<double, 4> coeffs);
    static TailAtom trig(double a, double b, double omega);
    static TailAtom sign_sin(double amplitude, double m, double phase = 0.0);
    static TailAtom power(double c, double p);

    double eval(double x) const;
    TailAtom shifted(double h) const;  // returns t -> atom(t + h)
    TailAtom scaled(double c) const;
    TailAtom reflected() const;  // returns t -> atom(-t)
    bool is_zero() const;

    // Growth exponent g with |atom(x)| <= C (1+|x|)^g as |x| -> inf.
    double growth() const;

    // sup over |x| in [lo_abs, inf); nullopt when unbounded.
    std::optional<double> sup_abs_from(double lo_abs) const;

    // True when the atom is piecewise constant in x.
    bool piecewise_const() const;
};

// A formula is a sum of atoms.  Kept normalized: like atoms merged,
// exact zeros dropped.
struct TailFormula {
    std::vector<TailAtom> atoms;

    static TailFormula zero() { return {}; }
    static TailFormula of(TailAtom a);

    double eval(double x) const;
    TailFormula shifted(double h) const;
    TailFormula scaled(double c) const;
    TailFormula reflected() const;
    TailFormula plus(const TailFormula& other) const;
    void normalize();

    double growth() const;
    std::optional<double> sup_abs_from(double lo_abs) const;
    bool piecewise_const() const;
    bool empty() const { return atoms.empty(); }
};

// One tail piece: the formula applies for x in [lo, hi).  Unbounded ends use
// +-infinity.
struct TailPiece {
    double lo = 0.0;
    double hi = 0.0;
    TailFormula formula;
};

// Full tail: ordered pieces covering (-inf, -X] and [X, inf).
struct TailSpec {
    std::vector<TailPiece> pieces;  // sorted by lo

    static TailSpec zero(double halfwidth);
    static TailSpec constant(double halfwidth, double value);
    // Square-wave data with a silent collar: 0 on [halfwidth, collar] and
    // sign(sin(m pi x)) beyond +-collar.  Used by the oscillating-data
    // harness with halfwidth 1, collar 2.
    static TailSpec sign_sin_with_collar(double halfwidth, double collar, double m);
    // Single formula on both unbounded sides.
    static TailSpec uniform(double halfwidth, TailFormula f);

    // Checks that pieces tile (-inf,-X] u [X,inf) for the given halfwidth.
    void validate(double halfwidth) const;

    double eval(double x) const;
    const TailPiece& piece_at(double x) const;

    // Largest growth exponent among unbounded pieces (0 when all bounded).
    double growth() const;
    // Conservative sup bound over the whole tail; nullopt when unbounded.
    std::optional<double> sup_abs() const;

    // Collect discontinuity/lattice points of the tail inside [a, b]
    // (piece edges plus square-wave sign changes).
    void append_breakpoints(double a, double b, std::vector<double>& out) const;

    TailSpec scaled(double c) const;
};

}  // namespace nlab

#endif  // NLAB_TAIL_HPP
