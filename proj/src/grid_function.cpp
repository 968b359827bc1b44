#include "nlab/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlab/quadrature.hpp"

namespace nlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

GridFunction::GridFunction(double halfwidth, double spacing, std::vector<double> values,
                           TailSpec tail)
    : halfwidth_(halfwidth), h_(spacing), v_(std::move(values)), tail_(std::move(tail)) {
    if (!(halfwidth_ > 0.0) || !(h_ > 0.0))
        throw ConfigError("grid needs positive halfwidth and spacing");
    double n_cells = 2.0 * halfwidth_ / h_;
    if (std::abs(n_cells - std::round(n_cells)) > 1e-9)
        throw ConfigError("grid spacing must divide the window exactly");
    size_t n = static_cast<size_t>(std::llround(n_cells)) + 1;
    if (v_.size() != n) throw ConfigError("value count does not match the grid");
    if (n < 9) throw ConfigError("grid needs at least 9 nodes");
    for (double v : v_)
        if (!std::isfinite(v)) throw ConfigError("grid values must be finite");
    tail_.validate(halfwidth_);
}

GridFunction GridFunction::sample(double halfwidth, double spacing,
                                  const std::function<double(double)>& f, TailSpec tail) {
    size_t n = static_cast<size_t>(std::llround(2.0 * halfwidth / spacing)) + 1;
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = f(-halfwidth + spacing * static_cast<double>(i));
    return GridFunction(halfwidth, spacing, std::move(v), std::move(tail));
}

int GridFunction::node_index(double x) const {
    double t = (x + halfwidth_) / h_;
    double i = std::round(t);
    if (std::abs(t - i) > 1e-9) return -1;
    if (i < 0.0 || i >= static_cast<double>(v_.size())) return -1;
    return static_cast<int>(i);
}

double GridFunction::eval(double x) const {
    if (std::abs(x) > halfwidth_) return tail_.eval(x);
    double t = (x + halfwidth_) / h_;
    double nearest = std::round(t);
    if (std::abs(t - nearest) < 1e-12 && nearest >= 0.0 &&
        nearest < static_cast<double>(v_.size()))
        return v_[static_cast<size_t>(nearest)];

    // 4-node Lagrange cubic around the cell containing x.
    int n = size();
    int j = static_cast<int>(std::floor(t));
    j = std::clamp(j, 0, n - 2);
    int i0 = std::clamp(j - 1, 0, n - 4);
    double s = t - i0;
    double l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    double l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    double l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    double l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    return l0 * v_[i0] + l1 * v_[i0 + 1] + l2 * v_[i0 + 2] + l3 * v_[i0 + 3];
}

double GridFunction::curvature(double x) const {
    if (std::abs(x) > halfwidth_)
        throw OutOfDomain("curvature is defined on the grid window only");
    int n = size();
    double t = (x + halfwidth_) / h_;
    int j = static_cast<int>(std::floor(t));
    j = std::clamp(j, 0, n - 2);
    int i0 = std::clamp(j - 1, 0, n - 4);
    double s = t - i0;
    // second derivatives of the cubic Lagrange basis in cell coordinates
    double d0 = 2.0 - s;
    double d1 = 3.0 * s - 5.0;
    double d2 = 4.0 - 3.0 * s;
    double d3 = s - 1.0;
    return (d0 * v_[i0] + d1 * v_[i0 + 1] + d2 * v_[i0 + 2] + d3 * v_[i0 + 3]) / (h_ * h_);
}

double second_difference(const GridFunction& u, double x, double y) {
    if (!u.covers(x))
        throw OutOfDomain("second difference centered outside the grid window");
    return 0.5 * (u.eval(x + y) + u.eval(x - y)) - u.eval(x);
}

double finite_diff_derivative(const GridFunction& u, double x, int order) {
    int i = u.node_index(x);
    if (i < 0) throw OutOfDomain("derivative requested off the node lattice");
    if (order != 1 && order != 2)
        throw ConfigError("finite difference order must be 1 or 2");
    int n = u.size();
    if (i - 1 < 0 || i + 1 >= n)
        throw OutOfStencil("derivative stencil leaves the grid");
    double h = u.spacing();
    if (order == 1) return (u.value(i + 1) - u.value(i - 1)) / (2.0 * h);
    return (u.value(i + 1) - 2.0 * u.value(i) + u.value(i - 1)) / (h * h);
}

GridFunction combine_shifts(const GridFunction& u, const std::vector<ShiftAtom>& atoms) {
    if (atoms.empty()) throw ConfigError("combine_shifts needs at least one atom");
    double H = 0.0;
    for (const auto& a : atoms) H = std::max(H, std::abs(a.offset));
    double h = u.spacing();
    double widen = std::ceil(H / h - 1e-12) * h;
    double Xw = u.halfwidth() + widen;

    size_t n = static_cast<size_t>(std::llround(2.0 * Xw / h)) + 1;
    std::vector<double> vals(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double x = -Xw + h * static_cast<double>(i);
        double s = 0.0;
        for (const auto& a : atoms) s += a.weight * u.eval(x + a.offset);
        vals[i] = s;
    }

    // Combined tail: valid for |x| > Xw, where every x + offset is itself in
    // u's tail.  Pieces split wherever any shifted copy crosses one of u's
    // piece edges.
    std::vector<double> cuts{-kInf, -Xw, Xw, kInf};
    for (const auto& p : u.tail().pieces) {
        for (double edge : {p.lo, p.hi}) {
            if (!std::isfinite(edge)) continue;
            for (const auto& a : atoms) {
                double c = edge - a.offset;
                if (std::abs(c) > Xw * (1.0 + 1e-15)) cuts.push_back(c);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    TailSpec tail;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = cuts[i], hi = cuts[i + 1];
        if (lo >= -Xw && hi <= Xw) continue;  // the grid window gap
        double probe = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi)
                       : std::isfinite(lo)                    ? lo + 1.0
                                                              : hi - 1.0;
        TailFormula f;
        for (const auto& a : atoms) {
            const TailPiece& src = u.tail().piece_at(probe + a.offset);
            f = f.plus(src.formula.shifted(a.offset).scaled(a.weight));
        }
        tail.pieces.push_back({lo, hi, f});
    }
    return GridFunction(Xw, h, std::move(vals), std::move(tail));
}

double weighted_l1_norm(const GridFunction& u, double sigma) {
    if (!(sigma > 0.0) || !(sigma < 2.0)) throw ConfigError("sigma must lie in (0,2)");
    double g = u.tail().growth();
    if (g >= sigma - 1e-12)
        throw DivergentTail("tail growth " + std::to_string(g) +
                            " is not integrable at order " + std::to_string(sigma));

    auto w = [sigma](double y) { return std::pow(1.0 + std::abs(y), -1.0 - sigma); };

    // interior: Gauss-Legendre per grid cell (integrand smooth except |.| kinks)
    double total = 0.0;
    for (int i = 0; i + 1 < u.size(); ++i) {
        double a = u.node(i), b = u.node(i + 1);
        total += quad::gl(a, b, 8, [&](double y) { return std::abs(u.eval(y)) * w(y); });
    }

    // tail pieces: dyadic panels aligned to square-wave lattices, stopping on
    // the envelope bound
    const double tol = 1e-11;
    for (const auto& p : u.tail().pieces) {
        // mirror leftward pieces so the walk always moves toward +inf in |y|
        bool leftward = p.hi <= 0.0;
        TailFormula f_abs = leftward ? p.formula.reflected() : p.formula;
        double a = leftward ? -p.hi : p.lo;
        double b0 = leftward ? (std::isfinite(p.lo) ? -p.lo : kInf)
                             : (std::isfinite(p.hi) ? p.hi : kInf);
        auto f = [&](double r) { return std::abs(f_abs.eval(r)) * w(r); };
        a = std::max(a, 1e-12);
        while (a < b0) {
            double b = std::min(b0, std::max(a * 2.0, a + 1.0));
            if (!std::isfinite(b0)) {
                auto sup = f_abs.sup_abs_from(a);
                double env = sup ? *sup : kInf;
                if (std::isfinite(env) &&
                    env * std::pow(1.0 + a, -sigma) / sigma < tol)
                    break;  // bounded remainder below tol; accounted as zero
            }
            std::vector<double> cuts{a, b};
            std::vector<double> bps;
            double ya = leftward ? -b : a, yb = leftward ? -a : b;
            u.tail().append_breakpoints(ya, yb, bps);
            for (double c : bps) {
                double r = std::abs(c);
                if (r > a && r < b) cuts.push_back(r);
            }
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            if (cuts.size() > 130) {
                // dense oscillation: integrate |formula| via its local mean
                double mean = 0.0;
                int samples = 257;
                for (int k = 0; k < samples; ++k) {
                    double r = a + (b - a) * (k + 0.5) / samples;
                    mean += std::abs(f_abs.eval(r));
                }
                mean /= samples;
                total += mean * quad::gl(a, b, 16, w);
            } else {
                for (size_t k = 0; k + 1 < cuts.size(); ++k)
                    total += quad::gl(cuts[k], cuts[k + 1], 8, f);
            }
            a = b;
        }
    }
    return total;
}

}  // namespace nlab
