#include "nlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

namespace nlab::quad {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// --- Gauss-Legendre rules ----------------------------------------------------

namespace {
GlRule build_gl(int n) {
    // Newton iteration on Legendre roots; standard and accurate to ~1e-15.
    GlRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.x[n - 1 - i] = x;
        r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}
}  // namespace

const GlRule& gl_rule(int n) {
    static std::map<int, GlRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_gl(n)).first;
    return it->second;
}

// --- exact power-law pieces ---------------------------------------------------

double power_integral(double p, double a, double b) {
    if (a == 0.0 && p > -1.0 + 1e-12 && b != kInf)
        return std::pow(b, p + 1.0) / (p + 1.0);
    if (!(a > 0.0)) throw SingularArgument("power integral reaches the origin");
    if (b == kInf) {
        if (!(p < -1.0)) throw DivergentTail("power integral diverges at infinity");
        return -std::pow(a, p + 1.0) / (p + 1.0);
    }
    if (!(b >= a)) return -power_integral(p, b, a);
    if (std::abs(p + 1.0) < 1e-12) return std::log(b / a);
    return (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
}

double affine_power_integral(double c0, double c1, double p, double a, double b) {
    double s = c0 == 0.0 ? 0.0 : c0 * power_integral(p, a, b);
    if (c1 != 0.0) s += c1 * power_integral(p + 1.0, a, b);
    return s;
}

// --- piecewise-constant far field ---------------------------------------------

namespace {

// Next lattice point strictly greater than y.
double next_lattice_point(const Lattice& lat, double y) {
    double k = std::floor((y - lat.offset) / lat.step) + 1.0;
    double x = lat.offset + k * lat.step;
    // fp ties: make strict progress
    while (x <= y * (1.0 + 1e-15) + 1e-300) {
        k += 1.0;
        x = lat.offset + k * lat.step;
    }
    return x;
}

// Smallest common value period of the lattices, or 0 when there is none.
double common_period(const std::vector<Lattice>& lats) {
    if (lats.empty()) return 0.0;
    double base = 0.0;
    for (const auto& l : lats) base = std::max(base, l.value_period);
    for (int mult = 1; mult <= 4096; ++mult) {
        double P = mult * base;
        bool ok = true;
        for (const auto& l : lats) {
            double q = P / l.value_period;
            if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q)) {
                ok = false;
                break;
            }
        }
        if (ok) return P;
    }
    return 0.0;
}

struct PeriodProfile {
    std::vector<double> start;  // piece starts, relative to period origin
    std::vector<double> len;
    std::vector<double> val;
    double mean = 0.0;       // period mean of the value
    double drift_mean = 0.0; // period mean of C(s) = int (value - mean)
    double drift_bound = 0.0;// bound for |int (C - drift_mean)| over the period
};

PeriodProfile build_period_profile(const FarProfile& prof, double Y, double P) {
    PeriodProfile pp;
    std::vector<double> cuts;
    cuts.push_back(0.0);
    for (const auto& lat : prof.lattices) {
        double y = Y;
        while (true) {
            double x = next_lattice_point(lat, y);
            if (x >= Y + P * (1.0 - 1e-12)) break;
            cuts.push_back(x - Y);
            y = x;
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [P](double a, double b) { return std::abs(a - b) < 1e-13 * P; }),
               cuts.end());
    cuts.push_back(P);
    double mass = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i], b = cuts[i + 1];
        if (b - a < 1e-14 * P) continue;
        pp.start.push_back(a);
        pp.len.push_back(b - a);
        pp.val.push_back(prof.value(Y + 0.5 * (a + b)));
        mass += pp.val.back() * (b - a);
    }
    pp.mean = mass / P;
    // C(s) = int_0^s (value - mean); piecewise linear, C(0) = C(P) = 0.
    size_t n = pp.val.size();
    std::vector<double> c(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) c[i + 1] = c[i] + (pp.val[i] - pp.mean) * pp.len[i];
    double cbar = 0.0;
    for (size_t i = 0; i < n; ++i)
        cbar += c[i] * pp.len[i] + 0.5 * (pp.val[i] - pp.mean) * pp.len[i] * pp.len[i];
    cbar /= P;
    pp.drift_mean = cbar;
    double dev = 0.0;
    for (size_t i = 0; i <= n; ++i) dev = std::max(dev, std::abs(c[i] - cbar));
    pp.drift_bound = P * dev;
    return pp;
}

}  // namespace

double far_piecewise_integral(const FarProfile& prof, double sigma, double Y0,
                              double tol) {
    if (!(Y0 > 0.0)) throw SingularArgument("far field must start at positive radius");
    std::vector<double> edges;
    for (double e : prof.edges)
        if (e > Y0 * (1.0 + 1e-15)) edges.push_back(e);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    double total = 0.0;
    double y = Y0;
    double ypow = std::pow(y, -sigma);
    size_t next_edge = 0;
    auto advance_to = [&](double target) {
        // walk exact pieces from y to target, subdividing at lattice points
        while (y < target * (1.0 - 1e-15)) {
            double nxt = target;
            for (const auto& lat : prof.lattices)
                nxt = std::min(nxt, next_lattice_point(lat, y));
            nxt = std::min(nxt, target);
            double v = prof.value(0.5 * (y + nxt));
            double npow = std::pow(nxt, -sigma);
            if (v != 0.0) total += v * (ypow - npow) / sigma;
            y = nxt;
            ypow = npow;
        }
        y = target;
        ypow = std::pow(y, -sigma);
    };

    // finite prefix up to the last edge
    while (next_edge < edges.size()) advance_to(edges[next_edge++]);

    if (prof.lattices.empty()) {
        double v = prof.value(y * 1.0000001 + 1e-12);
        return total + v * ypow / sigma;
    }

    double P = common_period(prof.lattices);
    if (P <= 0.0) throw Error("far-field lattices have no common period");

    PeriodProfile pp = build_period_profile(prof, y, P);
    double bound_coef = (1.0 + sigma) * pp.drift_bound;
    long max_periods = 50'000'000 / std::max<size_t>(1, pp.val.size());
    long count = 0;
    while (bound_coef * std::pow(y, -2.0 - sigma) > tol) {
        // one full period of exact pieces
        for (size_t i = 0; i < pp.val.size(); ++i) {
            double b = y + pp.len[i];
            double npow = std::pow(b, -sigma);
            if (pp.val[i] != 0.0) total += pp.val[i] * (ypow - npow) / sigma;
            y = b;
            ypow = npow;
        }
        if (++count > max_periods)
            throw Error("far-field tolerance unreachable within piece budget");
    }
    total += pp.mean * ypow / sigma + pp.drift_mean * std::pow(y, -1.0 - sigma);
    return total;
}

double far_periodic_smooth_integral(const std::function<double(double)>& g,
                                    double P, const std::vector<double>& edge_offsets,
                                    double sigma, double Y0, double tol) {
    // g is called with absolute coordinates and must satisfy g(y+P) = g(y)
    // for y >= Y0.
    if (!(Y0 > 0.0)) throw SingularArgument("far field must start at positive radius");
    // subpanel layout inside one period
    std::vector<double> cuts(edge_offsets);
    cuts.push_back(0.0);
    cuts.push_back(P);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> sub;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i], b = cuts[i + 1];
        int parts = std::max(1, static_cast<int>(std::ceil((b - a) / (P / 16.0))));
        for (int k = 0; k < parts; ++k) sub.push_back(a + (b - a) * k / parts);
    }
    sub.push_back(P);

    // period statistics for the remainder correction
    double mean = 0.0;
    for (size_t i = 0; i + 1 < sub.size(); ++i)
        mean += gl(sub[i], sub[i + 1], 16, [&](double s) { return g(Y0 + s); });
    mean /= P;
    // piecewise drift C(s); sampled densely for its mean and deviation
    const int ns = 512;
    std::vector<double> C(ns + 1, 0.0);
    for (int i = 0; i < ns; ++i) {
        double a = P * i / ns, b = P * (i + 1) / ns;
        C[i + 1] = C[i] + gl(a, b, 8, [&](double s) { return g(Y0 + s) - mean; });
    }
    double cbar = 0.0;
    for (int i = 0; i < ns; ++i) cbar += 0.5 * (C[i] + C[i + 1]) * (P / ns);
    cbar /= P;
    double dev = 0.0;
    for (int i = 0; i <= ns; ++i) dev = std::max(dev, std::abs(C[i] - cbar));
    double bound_coef = (1.0 + sigma) * P * dev;

    double total = 0.0;
    double y = Y0;
    long guard = 0;
    while (bound_coef * std::pow(y, -2.0 - sigma) > tol) {
        for (size_t i = 0; i + 1 < sub.size(); ++i) {
            double a = y + sub[i], b = y + sub[i + 1];
            total += gl(a, b, 16,
                        [&](double t) { return g(t) * std::pow(t, -1.0 - sigma); });
        }
        y += P;
        if (++guard > 2'000'000) throw Error("periodic far-field tolerance unreachable");
    }
    total += mean * std::pow(y, -sigma) / sigma + cbar * std::pow(y, -1.0 - sigma);
    return total;
}

// --- trigonometric tails -------------------------------------------------------

namespace {

// Integration-by-parts series for ∫_Y^inf trig(omega y + phase) y^{-p} dy.
// start_cos picks cos (true) or sin (false).  Returns false when the series
// cannot reach tol at this Y.
bool trig_series(double omega, double phase, double p, double Y, double tol,
                 bool start_cos, double* out) {
    double S = std::sin(omega * Y + phase);
    double C = std::cos(omega * Y + phase);
    double mult = 1.0;  // coefficient multiplying the remaining integral
    double q = p;
    bool is_cos = start_cos;
    double total = 0.0;
    double ypow = std::pow(Y, -q);
    for (int k = 0; k < 80; ++k) {
        // remaining integral bound: |mult| * Y^{1-q} / (q-1)
        double rem = std::abs(mult) * ypow * Y / (q - 1.0);
        if (rem < tol) {
            *out = total;
            return true;
        }
        if (is_cos) {
            total += mult * (-S) * ypow / omega;
            mult *= q / omega;
        } else {
            total += mult * C * ypow / omega;
            mult *= -q / omega;
        }
        is_cos = !is_cos;
        q += 1.0;
        ypow /= Y;
        if (std::abs(mult) * ypow * Y / (q - 1.0) > rem) return false;  // diverging
    }
    return false;
}

double trig_tail(double omega, double phase, double p, double Y, double tol,
                 bool start_cos) {
    if (!(p > 1.0)) throw DivergentTail("trig tail needs decay faster than 1/y");
    if (!(omega > 0.0)) throw SingularArgument("trig tail needs positive frequency");
    double prefix = 0.0;
    double Yc = Y;
    for (int round = 0; round < 48; ++round) {
        double s = 0.0;
        if (trig_series(omega, phase, p, Yc, tol * 0.5, start_cos, &s))
            return prefix + s;
        // resolve oscillations over [Yc, 2Yc] by panels, then retry further out
        double width = std::min(M_PI / (2.0 * omega), Yc / 8.0);
        int n = static_cast<int>(std::ceil(Yc / width));
        for (int i = 0; i < n; ++i) {
            double a = Yc + Yc * i / n, b = Yc + Yc * (i + 1) / n;
            prefix += gl(a, b, 8, [&](double y) {
                double t = omega * y + phase;
                return (start_cos ? std::cos(t) : std::sin(t)) * std::pow(y, -p);
            });
        }
        Yc *= 2.0;
    }
    throw Error("trig tail did not converge");
}

}  // namespace

double trig_tail_cos(double omega, double phase, double p, double Y, double tol) {
    return trig_tail(omega, phase, p, Y, tol, true);
}

double trig_tail_sin(double omega, double phase, double p, double Y, double tol) {
    return trig_tail(omega, phase, p, Y, tol, false);
}

}  // namespace nlab::quad
