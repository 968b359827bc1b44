// The split masses integrate d(y) = d2u(x,y) - d2u(base,y) against the flat
// kernel, separating the sign regions exactly: panels are cut at every tail
// breakpoint and window edge seen from x and base, zeros of d inside a panel
// are bisected to machine precision, and the far field collapses either to a
// closed form (polynomial tails of degree <= 2 make d exactly constant) or to
// a periodic-mean estimate over a whole number of oscillation periods.

#include "nlab/liouville.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "nlab/quadrature.hpp"

namespace nlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

// Quadrature floor for the split masses; comparability is only claimed when
// P + N exceeds ten times this.
constexpr double kMassTol = 1e-4;

void validate_input(const LiouvilleInput& inp) {
    if (inp.u.halfwidth() < 8.0)
        throw ConfigError("checker window must have halfwidth at least 8");
}

double node_sup(const GridFunction& u) {
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s = std::max(s, std::abs(u.value(i)));
    return s;
}

struct TailTraits {
    bool exact_const = true;   // d is exactly constant beyond the mixing range
    double max_growth = 0.0;   // growth exponent of d from the tail atoms
    double freq_cap = 1.0;     // largest angular frequency, floor 1
    double period_max = 0.0;   // longest oscillation period, 0 when none
};

// Second differences kill constants and linears and the x-difference removes
// the quadratic part, so degree <= 2 polynomial tails leave an exactly
// constant d; oscillations stay bounded and powers lose two orders.
TailTraits classify(const TailSpec& tail) {
    TailTraits t;
    for (const auto& pc : tail.pieces) {
        for (const auto& a : pc.formula.atoms) {
            switch (a.kind) {
                case TailAtom::Kind::Const:
                    break;
                case TailAtom::Kind::Poly:
                    if (a.coef[3] != 0.0) {
                        t.max_growth = std::max(t.max_growth, 2.0);
                        t.exact_const = false;
                    }
                    break;
                case TailAtom::Kind::Trig:
                    if (std::abs(a.freq) < 1e-12) break;
                    t.exact_const = false;
                    t.freq_cap = std::max(t.freq_cap, std::abs(a.freq));
                    t.period_max = std::max(t.period_max, 2.0 * kPi / std::abs(a.freq));
                    break;
                case TailAtom::Kind::SignSin:
                    if (std::abs(a.freq) < 1e-12) break;
                    t.exact_const = false;
                    t.freq_cap = std::max(t.freq_cap, kPi * std::abs(a.freq));
                    t.period_max = std::max(t.period_max, 2.0 / std::abs(a.freq));
                    break;
                case TailAtom::Kind::Power:
                    t.exact_const = false;
                    t.max_growth = std::max(t.max_growth, std::max(0.0, a.freq - 2.0));
                    break;
            }
        }
    }
    return t;
}

}  // namespace

SplitMass compute_P_N(const LiouvilleInput& inp, double x, double base) {
    validate_input(inp);
    const GridFunction& u = inp.u;
    double sigma = inp.exps.sigma;
    if (x == base) return {};
    TailTraits tr = classify(u.tail());
    if (tr.max_growth >= sigma)
        throw DivergentTail("second-difference increment does not decay against the kernel");

    double X = u.halfwidth();
    double Y0 = std::max(std::abs(x), std::abs(base)) + X + 1.0;
    double Yend = tr.exact_const ? Y0 : std::max(Y0, 2048.0);
    double ux = u.eval(x), ub = u.eval(base);
    // Increments below ~2^-42 of the data scale are cancellation noise that
    // the singular kernel would amplify; treat them as exact zeros.  The
    // floor depends only on |u|, so negating the data or exchanging x with
    // the base still swaps the two masses bitwise.
    double dead =
        std::ldexp(std::max({node_sup(u), std::abs(ux), std::abs(ub)}), -42);
    auto d = [&](double y) {
        double raw = 0.5 * (u.eval(x + y) + u.eval(x - y)) - ux -
                     (0.5 * (u.eval(base + y) + u.eval(base - y)) - ub);
        return std::abs(raw) <= dead ? 0.0 : raw;
    };
    auto kt = [&](double y) { return (2.0 - sigma) * std::pow(y, -1.0 - sigma); };

    double w = std::min(0.5, 1.5 / tr.freq_cap);
    std::vector<double> cuts;
    cuts.reserve(static_cast<size_t>(Yend / w) + 64);
    cuts.push_back(0.0);
    for (int k = 12; k >= 1; --k) cuts.push_back(w / (1 << k));
    for (double y = w; y < Yend; y += w) cuts.push_back(y);
    cuts.push_back(Yend);
    std::vector<double> ts;
    u.tail().append_breakpoints(std::min(x, base) - Yend, std::max(x, base) + Yend, ts);
    ts.push_back(X);
    ts.push_back(-X);
    for (double t : ts)
        for (double c : {t - x, x - t, t - base, base - t})
            if (c > 1e-9 && c < Yend - 1e-9) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return b - a < 1e-12; }),
               cuts.end());

    double ppos = 0.0, pneg = 0.0;  // single-side masses
    std::vector<double> bounds_buf;
    for (size_t j = 0; j + 1 < cuts.size(); ++j) {
        double a = cuts[j], b = cuts[j + 1];
        // Locate the zeros of d inside the panel, then integrate each
        // sign-constant stretch separately.
        constexpr int ns = 5;
        double sx[ns], sv[ns];
        for (int q = 0; q < ns; ++q) {
            sx[q] = a + (b - a) * q / (ns - 1);
            sv[q] = d(sx[q]);
        }
        bounds_buf.assign({a});
        for (int q = 0; q + 1 < ns; ++q) {
            // An exact zero at a sample is itself a boundary; bisection only
            // hunts strict sign changes.  Both rules are invariant under
            // negating d, which keeps the P/N split exactly swappable.
            if (q > 0 && sv[q] == 0.0) bounds_buf.push_back(sx[q]);
            bool flip = (sv[q] > 0.0 && sv[q + 1] < 0.0) ||
                        (sv[q] < 0.0 && sv[q + 1] > 0.0);
            if (!flip) continue;
            double lo = sx[q], hi = sx[q + 1], dlo = sv[q];
            for (int it = 0; it < 48; ++it) {
                double mid = 0.5 * (lo + hi);
                double dm = d(mid);
                if ((dm > 0.0) == (dlo > 0.0)) {
                    lo = mid;
                    dlo = dm;
                } else {
                    hi = mid;
                }
            }
            bounds_buf.push_back(0.5 * (lo + hi));
        }
        bounds_buf.push_back(b);
        for (size_t q = 0; q + 1 < bounds_buf.size(); ++q) {
            double c0 = bounds_buf[q], c1 = bounds_buf[q + 1];
            if (c1 - c0 < 1e-14) continue;
            double v = quad::gl(c0, c1, 16, [&](double y) { return d(y) * kt(y); });
            // The stretch is sign-constant, so the integral's sign matches
            // the integrand's; attributing by value is exact under negation.
            if (v >= 0.0)
                ppos += v;
            else
                pneg += -v;
        }
    }

    double tfar = (2.0 - sigma) * quad::power_integral(-1.0 - sigma, Yend, kInf);
    if (tr.exact_const) {
        double c = d(Yend + 7.3);
        if (c >= 0.0)
            ppos += c * tfar;
        else
            pneg += -c * tfar;
    } else {
        double W = tr.period_max > 0.0 ? std::clamp(32.0 * tr.period_max, 16.0, 512.0)
                                       : 16.0;
        constexpr int M = 8192;
        double sp = 0.0, sn = 0.0;
        for (int j = 0; j <= M; ++j) {
            double v = d(Yend + W * j / M);
            double wj = (j == 0 || j == M) ? 0.5 : 1.0;
            sp += wj * std::max(v, 0.0);
            sn += wj * std::max(-v, 0.0);
        }
        ppos += sp / M * tfar;
        pneg += sn / M * tfar;
    }
    return {2.0 * std::max(ppos, 0.0), 2.0 * std::max(pneg, 0.0)};
}

ComparabilityReport check_comparability(const LiouvilleInput& inp,
                                        const std::vector<double>& points) {
    validate_input(inp);
    double sigma = inp.exps.sigma;
    double slack = 1e-6 * (1.0 + node_sup(inp.u));
    ComparabilityReport rep;
    rep.note =
        "sample-based check: the sign hypothesis is verified only at the "
        "connecting shift of each tested point";
    for (double x : points) {
        ComparabilityPoint pt;
        pt.x = x;
        SplitMass pn = compute_P_N(inp, x, 0.0);
        pt.positive = pn.positive;
        pt.negative = pn.negative;
        double tm = translation_difference_apply(inp.u, x, ExtremalSign::Minus,
                                                 inp.bounds, sigma, 0.0, inp.quad);
        double tp = translation_difference_apply(inp.u, x, ExtremalSign::Plus,
                                                 inp.bounds, sigma, 0.0, inp.quad);
        pt.hypothesis_ok = tm <= slack && tp >= -slack;
        pt.skipped = pn.positive + pn.negative <= 10.0 * kMassTol;
        double ctol = 1e-3 * inp.bounds.ratio() * (1.0 + pn.positive + pn.negative);
        double lo = inp.bounds.lambda / inp.bounds.Lambda * pn.positive;
        double hi = inp.bounds.Lambda / inp.bounds.lambda * pn.positive;
        pt.comparable =
            pt.hypothesis_ok && lo <= pn.negative + ctol && pn.negative <= hi + ctol;
        if (!pt.skipped && pt.hypothesis_ok && !pt.comparable) rep.all_pass = false;
        rep.points.push_back(pt);
    }
    return rep;
}

HypothesisReport check_hypotheses(const LiouvilleInput& inp,
                                  const std::vector<double>& shifts,
                                  const std::vector<std::vector<ShiftAtom>>& measures,
                                  const std::vector<double>& radii) {
    validate_input(inp);
    double sigma = inp.exps.sigma;
    double slack = 1e-6 * (1.0 + node_sup(inp.u));
    // Translation and averaged differences of polynomial data cancel only to
    // rounding noise, which the singular kernel amplifies through the
    // curvature stencil; values below ~2^-42 of the data scale are snapped to
    // exact zeros, matching the split-mass increment floor.
    double dead = std::ldexp(node_sup(inp.u), -42);
    auto snap = [dead](double v) { return std::abs(v) <= dead ? 0.0 : v; };
    HypothesisReport out;
    out.growth = growth_control_check(inp.u, inp.exps, inp.c1, radii);
    out.pass_growth = out.growth.all_pass;

    const double xs[] = {0.0, -0.5, 0.5, -1.0, 1.0, -2.0, 2.0};
    if (shifts.empty()) {
        out.pass_translation = true;
    } else {
        double wm = -kInf, wp = kInf;
        for (double h : shifts) {
            for (double x : xs) {
                wm = std::max(wm, snap(translation_difference_apply(
                                      inp.u, h, ExtremalSign::Minus, inp.bounds,
                                      sigma, x, inp.quad)));
                wp = std::min(wp, snap(translation_difference_apply(
                                      inp.u, h, ExtremalSign::Plus, inp.bounds,
                                      sigma, x, inp.quad)));
            }
        }
        out.worst_minus = wm;
        out.worst_plus = wp;
        out.pass_translation = wm <= slack && wp >= -slack;
    }

    if (measures.empty()) {
        out.pass_average = true;
    } else {
        double wa = kInf;
        for (const auto& mu : measures)
            for (double x : xs)
                wa = std::min(wa, snap(average_difference_apply(
                                      inp.u, mu, inp.bounds, sigma, x,
                                      inp.quad)));
        out.worst_average = wa;
        out.pass_average = wa >= -slack;
    }

    out.all_pass = out.pass_growth && out.pass_translation && out.pass_average;
    out.note =
        "hypotheses sampled at finitely many shifts, measures, and points; a "
        "pass means not falsified on this sample";
    return out;
}

double polynomial_conclusion_residual(const LiouvilleInput& inp) {
    validate_input(inp);
    const GridFunction& u = inp.u;
    PolyFit fit = l2_poly_fit(u, inp.exps.nu(), 0.0, u.halfwidth());
    double num = 0.0, den = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        num = std::max(num, std::abs(u.value(i) - fit.eval(u.node(i))));
        den = std::max(den, std::abs(u.value(i)));
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace nlab
