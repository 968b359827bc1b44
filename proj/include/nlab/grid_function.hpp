// GridFunction: uniform samples on [-X, X] plus an exact tail description.
//
// Evaluation anywhere on the line: piecewise-cubic interpolation between
// nodes (exact at nodes, reproduces cubics), tail formulas outside.  The
// centered second difference and the finite-difference derivatives defined
// here are the only ways downstream code probes a function's local shape,
// so their stencil and boundary conventions are fixed once here.

#ifndef NLAB_GRID_FUNCTION_HPP
#define NLAB_GRID_FUNCTION_HPP

#include <functional>
#include <vector>

#include "nlab/tail.hpp"
#include "nlab/types.hpp"

namespace nlab {

class GridFunction {
public:
    GridFunction(double halfwidth, double spacing, std::vector<double> values,
                 TailSpec tail);

    static GridFunction sample(double halfwidth, double spacing,
                               const std::function<double(double)>& f, TailSpec tail);

    double halfwidth() const { return halfwidth_; }
    double spacing() const { return h_; }
    int size() const { return static_cast<int>(v_.size()); }
    double node(int i) const { return -halfwidth_ + h_ * i; }
    double value(int i) const { return v_[static_cast<size_t>(i)]; }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }
    const TailSpec& tail() const { return tail_; }

    bool covers(double x) const { return std::abs(x) <= halfwidth_; }

    // Interpolated (or tail) value at any real x.
    double eval(double x) const;

    // Second derivative of the local interpolating cubic at interior x.
    double curvature(double x) const;

    // Index of the node nearest x, or -1 when x is not within rounding
    // distance of a node.
    int node_index(double x) const;

private:
    double halfwidth_;
    double h_;
    std::vector<double> v_;
    TailSpec tail_;
};

// Centered second difference (u(x+y) + u(x-y)) / 2 - u(x).
// x must lie inside the grid window; y may reach anywhere.
double second_difference(const GridFunction& u, double x, double y);

// Central finite difference of given order (1 or 2) at a grid node.
// Throws OutOfStencil when the stencil would leave the grid and
// OutOfDomain when x is not a node.
double finite_diff_derivative(const GridFunction& u, double x, int order);

// One shifted copy entering a linear combination sum_j weight_j * u(. + offset_j).
struct ShiftAtom {
    double offset = 0.0;
    double weight = 1.0;
};

// Materialize w(x) = sum_j weight_j u(x + offset_j) as a GridFunction on a
// widened window, with the combined tail assembled exactly from u's tail
// formulas.  Requires u's tail atoms to be shiftable (no |x|^p growth atoms).
GridFunction combine_shifts(const GridFunction& u, const std::vector<ShiftAtom>& atoms);

// Integral of |u| against (1 + |y|)^{-1-sigma} over the whole line.
// Throws DivergentTail when the tail grows at rate >= sigma.
double weighted_l1_norm(const GridFunction& u, double sigma);

}  // namespace nlab

#endif  // NLAB_GRID_FUNCTION_HPP
