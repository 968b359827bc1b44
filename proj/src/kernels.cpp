#include "nlab/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "nlab/quadrature.hpp"
#include "nlab/tail.hpp"

namespace nlab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double power_law(double sigma, double ay) {
    return (2.0 - sigma) * std::pow(ay, -1.0 - sigma);
}

void require_order(double sigma) {
    if (!(sigma > 0.0) || !(sigma < 2.0))
        throw ConfigError("kernel order must lie in (0,2)");
}
}  // namespace

KernelSpec KernelSpec::flat(double sigma, double value) {
    require_order(sigma);
    if (!(value > 0.0)) throw ConfigError("flat modulation must be positive");
    KernelSpec k;
    k.sigma = sigma;
    k.ykind = YKind::Flat;
    k.flat_value = value;
    return k;
}

KernelSpec KernelSpec::sign_cos(double sigma, double m, double base, double amp,
                                double split, double inner) {
    require_order(sigma);
    if (!(m > 0.0)) throw ConfigError("wave number must be positive");
    if (!(split > 0.0)) throw ConfigError("core radius must be positive");
    if (amp < 0.0) throw ConfigError("modulation amplitude must be nonnegative");
    KernelSpec k;
    k.sigma = sigma;
    k.ykind = YKind::SignCos;
    k.wave = m;
    k.base = base;
    k.amp = amp;
    k.split = split;
    k.inner_value = inner;
    return k;
}

KernelSpec KernelSpec::cosine(double sigma, double base, double amp, double omega) {
    require_order(sigma);
    if (!(omega > 0.0)) throw ConfigError("frequency must be positive");
    KernelSpec k;
    k.sigma = sigma;
    k.ykind = YKind::Cos;
    k.base = base;
    k.amp = amp;
    k.wave = omega;
    return k;
}

KernelSpec KernelSpec::with_x_power(double alpha) const {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw ConfigError("x exponent must lie in (0,1)");
    KernelSpec k = *this;
    k.xkind = XKind::BoundedPower;
    k.xalpha = alpha;
    return k;
}

double KernelSpec::x_factor(double x) const {
    switch (xkind) {
        case XKind::None:
            return 1.0;
        case XKind::BoundedPower:
            return 1.0 + std::min(1.0, std::pow(std::abs(x), xalpha));
    }
    return 1.0;
}

double KernelSpec::y_profile(double y) const {
    double ay = std::abs(y);
    switch (ykind) {
        case YKind::Flat:
            return flat_value;
        case YKind::SignCos:
            if (ay < split) return inner_value;
            // sign(cos(m pi y)) = sign(sin(pi (m y + 1/2))), exact on the lattice
            return base + amp * square_wave(wave * ay + 0.5);
        case YKind::Cos:
            return base + amp * std::cos(wave * ay);
    }
    return flat_value;
}

void KernelSpec::append_y_breakpoints(double a, double b,
                                      std::vector<double>& out) const {
    if (ykind != YKind::SignCos) return;
    if (split > a && split < b) out.push_back(split);
    // sign flips of cos(m pi y) at y = (k + 1/2)/m
    double lo = std::max(a, split);
    long k0 = static_cast<long>(std::ceil(lo * wave - 0.5));
    long k1 = static_cast<long>(std::floor(b * wave - 0.5));
    for (long k = k0; k <= k1; ++k) {
        double y = (static_cast<double>(k) + 0.5) / wave;
        if (y > a && y < b) out.push_back(y);
    }
}

KernelSpec::Range KernelSpec::y_range() const {
    Range r;
    switch (ykind) {
        case YKind::Flat:
            r.lo = r.hi = flat_value;
            r.lo_y = r.hi_y = 1.0;
            return r;
        case YKind::SignCos: {
            // exact: the outer wave takes base +- amp on intervals, the core
            // takes inner_value
            double wlo = base - amp, whi = base + amp;
            // first lattice points at or beyond the core where cos = -1 / +1
            long km = static_cast<long>(std::ceil((split * wave - 1.0) / 2.0));
            double y_minus = (2.0 * static_cast<double>(km) + 1.0) / wave;
            long kp = static_cast<long>(std::ceil(split * wave / 2.0));
            double y_plus = 2.0 * static_cast<double>(kp) / wave;
            if (y_plus < split) y_plus += 2.0 / wave;
            if (y_minus < split) y_minus += 2.0 / wave;
            r.lo = wlo;
            r.lo_y = y_minus;
            r.hi = whi;
            r.hi_y = y_plus;
            if (inner_value < r.lo) {
                r.lo = inner_value;
                r.lo_y = 0.5 * split;
            }
            if (inner_value > r.hi) {
                r.hi = inner_value;
                r.hi_y = 0.5 * split;
            }
            return r;
        }
        case YKind::Cos: {
            // sampled over one period with a Lipschitz widening
            int n = 1000;
            double period = 2.0 * kPi / wave;
            double h = period / n;
            r.lo = r.hi = base + amp;
            r.lo_y = r.hi_y = 0.0;
            for (int i = 0; i <= n; ++i) {
                double y = h * i;
                double v = base + amp * std::cos(wave * y);
                if (v < r.lo) {
                    r.lo = v;
                    r.lo_y = y;
                }
                if (v > r.hi) {
                    r.hi = v;
                    r.hi_y = y;
                }
            }
            double slack = std::abs(amp) * wave * h / 2.0;
            r.lo -= slack;
            r.hi += slack;
            return r;
        }
    }
    return r;
}

double KernelSpec::sup_modulation() const {
    double xhi = xkind == XKind::BoundedPower ? 2.0 : 1.0;
    return xhi * y_range().hi;
}

double kernel_eval(const KernelSpec& k, double x, double y) {
    if (y == 0.0) throw SingularArgument("kernel evaluated on the diagonal");
    return k.modulation(x, y) * power_law(k.sigma, std::abs(y));
}

CertResult check_L0(const KernelSpec& k, const EllipticityParams& p) {
    KernelSpec::Range yr = k.y_range();
    double xlo = 1.0, xhi = 1.0, xlo_at = 0.0, xhi_at = 0.0;
    if (k.xkind == KernelSpec::XKind::BoundedPower) {
        xhi = 2.0;
        xhi_at = 1.0;
    }

    CertResult res;
    // interval product with witness tracking
    struct Cand {
        double v, x, y;
    };
    Cand cands[4] = {{yr.lo * xlo, xlo_at, yr.lo_y},
                     {yr.lo * xhi, xhi_at, yr.lo_y},
                     {yr.hi * xlo, xlo_at, yr.hi_y},
                     {yr.hi * xhi, xhi_at, yr.hi_y}};
    Cand lo = cands[0], hi = cands[0];
    for (const Cand& c : cands) {
        if (c.v < lo.v) lo = c;
        if (c.v > hi.v) hi = c;
    }
    res.lo = lo.v;
    res.hi = hi.v;

    const double slack = 1e-12;
    if (lo.v < p.lambda - slack) {
        res.ok = false;
        res.witness_x = lo.x;
        res.witness_y = lo.y;
        return res;
    }
    if (hi.v > p.Lambda + slack) {
        res.ok = false;
        res.witness_x = hi.x;
        res.witness_y = hi.y;
        return res;
    }
    res.ok = true;
    return res;
}

double check_x_holder(const KernelSpec& k, double x, double xp, double r,
                      double alpha) {
    if (!(r > 0.0)) throw ConfigError("annulus radius must be positive");
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw ConfigError("exponent must lie in (0,1)");
    if (!k.x_dependent()) return 0.0;
    double dx = std::abs(x - xp);
    if (dx == 0.0) return 0.0;
    double dX = std::abs(k.x_factor(x) - k.x_factor(xp));
    if (dX == 0.0) return 0.0;

    // int_r^{2r} |Y(y)| y^{-1-sigma} dy, exact per piece for square waves
    double I = 0.0;
    if (k.piecewise_const_in_y()) {
        std::vector<double> cuts{r, 2.0 * r};
        k.append_y_breakpoints(r, 2.0 * r, cuts);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (size_t i = 0; i + 1 < cuts.size(); ++i) {
            double v = std::abs(k.y_profile(0.5 * (cuts[i] + cuts[i + 1])));
            if (v != 0.0)
                I += v * quad::power_integral(-1.0 - k.sigma, cuts[i], cuts[i + 1]);
        }
    } else {
        double period = 2.0 * kPi / k.wave;
        int panels = std::max(8, static_cast<int>(std::ceil(r / (period / 8.0))));
        double h = r / panels;
        for (int i = 0; i < panels; ++i)
            I += quad::gl(r + i * h, r + (i + 1) * h, 16, [&](double y) {
                return std::abs(k.y_profile(y)) * std::pow(y, -1.0 - k.sigma);
            });
    }
    // both half-lines contribute equally; the (2-sigma) factors cancel
    return 2.0 * dX * I / (std::pow(dx, alpha) * std::pow(r, -k.sigma));
}

double check_y_holder_tail(const KernelSpec& k, double rho, double alpha) {
    if (!(rho > 0.0)) throw ConfigError("tail radius must be positive");
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw ConfigError("exponent must lie in (0,1)");
    switch (k.ykind) {
        case KernelSpec::YKind::Flat:
            return 0.0;
        case KernelSpec::YKind::SignCos:
            throw NonHolderKernel(
                "square-wave modulation has unbounded Holder quotients");
        case KernelSpec::YKind::Cos:
            break;
    }
    // Brute-force quotient maximization.  The profile is even and periodic,
    // so pairs on [rho, rho + 3 periods] realize the sup up to sampling
    // resolution; mirrored pairs are separated further and cannot win.
    double period = 2.0 * kPi / k.wave;
    int n = 1600;
    std::vector<double> ys(n), vs(n);
    for (int i = 0; i < n; ++i) {
        ys[i] = rho + 3.0 * period * i / (n - 1);
        vs[i] = k.y_profile(ys[i]);
    }
    double best = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double q = std::abs(vs[i] - vs[j]) / std::pow(ys[j] - ys[i], alpha);
            if (q > best) best = q;
        }
    double sup = k.base + std::abs(k.amp);
    return best * std::pow(rho, alpha) / sup;
}

// --- mollification ----------------------------------------------------------

namespace {

double eta_raw(double u) {
    double t = 1.0 - u * u;
    if (t <= 0.0) return 0.0;
    return std::exp(-1.0 / t);
}

// composite 64 x GL16 over [-1,1]; fixes the normalization so that the same
// quadrature integrates eta to exactly 1
double eta_raw_mass() {
    static const double mass = [] {
        double s = 0.0;
        for (int i = 0; i < 64; ++i) {
            double a = -1.0 + 2.0 * i / 64.0;
            double b = a + 2.0 / 64.0;
            s += quad::gl(a, b, 16, eta_raw);
        }
        return s;
    }();
    return mass;
}

// integral of f(u) eta(u) over [-1,1] with optional interior cuts, composite
// GL16 with panel width <= 1/32
double eta_integral(const std::function<double(double)>& f,
                    std::vector<double> cuts) {
    cuts.push_back(-1.0);
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = std::max(cuts[i], -1.0), b = std::min(cuts[i + 1], 1.0);
        if (b <= a) continue;
        int sub = std::max(1, static_cast<int>(std::ceil((b - a) * 32.0)));
        double h = (b - a) / sub;
        for (int s = 0; s < sub; ++s)
            total += quad::gl(a + s * h, a + (s + 1) * h, 16,
                              [&](double u) { return MollifierSpec::eta(u) * f(u); });
    }
    return total;
}

}  // namespace

MollifierSpec::MollifierSpec(double eps) : epsilon(eps) {
    if (!(eps > 0.0) || !(eps < 1.0))
        throw ConfigError("mollifier scale must lie in (0,1)");
}

double MollifierSpec::eta(double u) { return eta_raw(u) / eta_raw_mass(); }

double MollifierSpec::xi(double u) {
    double a = std::abs(u);
    if (a <= 0.5) return 1.0;
    if (a >= 1.0) return 0.0;
    // smooth step between the plateaus: g(t) = B(t)/(B(t)+B(1-t))
    double t = 2.0 * (1.0 - a);
    double bt = std::exp(-1.0 / t);
    double bo = std::exp(-1.0 / (1.0 - t));
    return bt / (bt + bo);
}

double MollifierSpec::eta_mass() {
    return eta_integral([](double) { return 1.0; }, {});
}

double mollify_kernel(const KernelSpec& k, const MollifierSpec& m, double x,
                      double y) {
    if (y == 0.0) throw SingularArgument("kernel evaluated on the diagonal");
    double eps = m.epsilon;
    double ay = std::abs(y);
    double flat = power_law(k.sigma, ay);
    if (ay <= 2.0 * eps) return flat;  // xi(y/4e) = 1 there
    double xiv = MollifierSpec::xi(y / (4.0 * eps));

    // y-direction convolution; |y - eps u| keeps the sign of y since ay > eps
    std::vector<double> profile_cuts;
    k.append_y_breakpoints(ay - eps, ay + eps, profile_cuts);
    std::vector<double> ucuts;
    for (double c : profile_cuts) ucuts.push_back((ay - c) / eps * (y > 0 ? 1.0 : -1.0));
    double conv = eta_integral(
        [&](double u) {
            double yy = y - eps * u;
            return k.y_profile(yy) * power_law(k.sigma, std::abs(yy));
        },
        std::move(ucuts));

    if (k.x_dependent()) {
        // the modulation factorizes, so the double convolution does too
        std::vector<double> xcuts;
        for (double c : {x - 1.0, x + 1.0, x}) {
            double u = c / eps;
            if (u > -1.0 && u < 1.0) xcuts.push_back(u);
        }
        conv *= eta_integral([&](double s) { return k.x_factor(x - eps * s); },
                             std::move(xcuts));
    }
    return xiv * flat + (1.0 - xiv) * conv;
}

double mollify_coeff(const std::function<double(double)>& c,
                     const MollifierSpec& m, double x) {
    double eps = m.epsilon;
    return eta_integral([&](double u) { return c(x - eps * u); }, {});
}

double measure_mollified_ellipticity(const KernelSpec& k,
                                     const EllipticityParams& p,
                                     const MollifierSpec& m) {
    std::vector<double> xs{0.0};
    if (k.x_dependent()) xs = {0.0, 0.3, -0.7, 1.0, 2.5};
    double C = 1.0;
    int n = 400;
    for (double x : xs) {
        for (int i = 0; i < n; ++i) {
            // log-spaced |y| from eps/8 out to 64
            double t = static_cast<double>(i) / (n - 1);
            double ay = (m.epsilon / 8.0) * std::pow(64.0 / (m.epsilon / 8.0), t);
            double b = mollify_kernel(k, m, x, ay) / power_law(k.sigma, ay);
            if (b <= 0.0) throw BadMeasure("mollified modulation must stay positive");
            C = std::max({C, p.lambda / b, b / p.Lambda});
        }
    }
    return C;
}

}  // namespace nlab
