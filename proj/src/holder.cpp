#include "nlab/holder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "nlab/quadrature.hpp"

namespace nlab {

namespace {

constexpr size_t kAllPairsLimit = 4096;
constexpr double kClaimTol = 0.05;

struct DerivativeSamples {
    std::vector<double> x;
    std::vector<double> d;
    double bias = 0.0;
};

int order_floor(double beta) {
    if (!(beta > 0.0) || beta >= 3.0)
        throw ConfigError("seminorm order must lie in (0,3)");
    double r = std::round(beta);
    if (std::abs(beta - r) < 1e-9)
        throw ConfigError("seminorm order must not be an integer");
    return static_cast<int>(std::floor(beta));
}

// k-th derivative (or value) at every stride-th node inside (a, b)
DerivativeSamples sample_derivatives(const GridFunction& u, int k, double a,
                                     double b, int stride) {
    if (!(a < b)) throw ConfigError("region must be a nonempty interval");
    if (a < -u.halfwidth() - 1e-12 || b > u.halfwidth() + 1e-12)
        throw ConfigError("region exceeds the grid window");
    if (stride < 1) throw ConfigError("pair-sampling stride must be positive");
    DerivativeSamples s;
    for (int i = 0; i < u.size(); i += stride) {
        double x = u.node(i);
        if (x <= a || x >= b) continue;
        s.x.push_back(x);
        s.d.push_back(k == 0 ? u.value(i) : finite_diff_derivative(u, x, k));
    }
    if (s.x.size() < 2)
        throw ConfigError("region holds fewer than two sample nodes");
    if (k > 0) {
        for (size_t i = 1; i + 1 < s.d.size(); ++i)
            s.bias = std::max(
                s.bias, std::abs(s.d[i + 1] - 2.0 * s.d[i] + s.d[i - 1]) / 6.0);
    }
    return s;
}

// Deterministic max of quotient(i, j) over pairs: exhaustive on coarse
// sample sets, dyadic-gap strata with uniform base steps on fine ones.
double pair_sup(size_t n, const std::function<double(size_t, size_t)>& quotient) {
    double best = 0.0;
    if (n <= kAllPairsLimit) {
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j)
                best = std::max(best, quotient(i, j));
        return best;
    }
    for (size_t gap = 1; gap < n; gap *= 2) {
        size_t count = n - gap;
        size_t step = std::max<size_t>(1, count / kAllPairsLimit);
        for (size_t i = 0; i + gap < n; i += step)
            best = std::max(best, quotient(i, i + gap));
        best = std::max(best, quotient(n - 1 - gap, n - 1));
    }
    best = std::max(best, quotient(0, n - 1));
    return best;
}

double integer_sup_norm(const GridFunction& u, int beta, double R) {
    double best = 0.0;
    double inner = std::min(R, u.halfwidth() - 2.0 * u.spacing());
    for (int i = 0; i < u.size(); ++i) {
        double x = u.node(i);
        if (std::abs(x) > inner) continue;
        double v = beta == 0 ? u.value(i) : finite_diff_derivative(u, x, beta);
        best = std::max(best, std::abs(v));
    }
    return best;
}

// grid-cell panel integration of f over [lo, hi] (integrand smooth per cell)
double cellwise_integral(const GridFunction& u, double lo, double hi,
                         const std::function<double(double)>& f) {
    double X = u.halfwidth(), h = u.spacing();
    std::vector<double> cuts{lo, hi};
    long i0 = static_cast<long>(std::ceil((lo + X) / h - 1e-12));
    long i1 = static_cast<long>(std::floor((hi + X) / h + 1e-12));
    for (long i = i0; i <= i1; ++i) {
        double x = -X + h * static_cast<double>(i);
        if (x > lo + 1e-14 && x < hi - 1e-14) cuts.push_back(x);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
        total += quad::gl(cuts[i], cuts[i + 1], 8, f);
    return total;
}

}  // namespace

SeminormEstimate seminorm_estimate(const GridFunction& u, const SeminormQuery& q) {
    int k = order_floor(q.beta);
    double bp = q.beta - k;
    DerivativeSamples s = sample_derivatives(u, k, q.a, q.b, q.stride);
    SeminormEstimate out;
    out.derivative_bias = s.bias;
    out.value = pair_sup(s.x.size(), [&](size_t i, size_t j) {
        return std::abs(s.d[i] - s.d[j]) / std::pow(std::abs(s.x[i] - s.x[j]), bp);
    });
    return out;
}

double seminorm(const GridFunction& u, const SeminormQuery& q) {
    return seminorm_estimate(u, q).value;
}

double adimensional_seminorm(const GridFunction& u, double beta, double omega_a,
                             double omega_b) {
    int k = order_floor(beta);
    double bp = beta - k;
    DerivativeSamples s = sample_derivatives(u, k, omega_a, omega_b, 1);
    return pair_sup(s.x.size(), [&](size_t i, size_t j) {
        double di = std::min(s.x[i] - omega_a, omega_b - s.x[i]);
        double dj = std::min(s.x[j] - omega_a, omega_b - s.x[j]);
        double d = std::min(di, dj);
        return std::pow(d, beta) * std::abs(s.d[i] - s.d[j]) /
               std::pow(std::abs(s.x[i] - s.x[j]), bp);
    });
}

HolderExponents alpha_prime(double sigma, double alpha) {
    HolderExponents requested(sigma, alpha);
    // The reduced pair is always admissible: sigma + alpha' lies strictly
    // between floor(sigma + alpha) and sigma + alpha, so it is non-integer.
    return HolderExponents(sigma, requested.alpha_prime());
}

GrowthReport growth_control_check(const GridFunction& u, const HolderExponents& e,
                                  double C1, const std::vector<double>& radii) {
    if (radii.empty()) throw ConfigError("growth check needs at least one radius");
    double top = e.sigma + e.alpha_prime();
    std::vector<double> betas;
    for (int b = 0; b <= static_cast<int>(std::floor(top)); ++b)
        betas.push_back(static_cast<double>(b));
    if (std::abs(top - std::round(top)) > 1e-9) betas.push_back(top);

    GrowthReport rep;
    for (double R : radii) {
        if (R < 1.0 || R > u.halfwidth())
            throw ConfigError("growth radii must lie in [1, grid halfwidth]");
        for (double beta : betas) {
            GrowthEntry ent;
            ent.beta = beta;
            ent.radius = R;
            if (beta == std::floor(beta) && std::abs(beta - std::round(beta)) < 1e-9)
                ent.measured = integer_sup_norm(u, static_cast<int>(beta), R);
            else
                ent.measured = seminorm(u, {beta, -R, R, 1});
            ent.bound = C1 * std::pow(R, e.sigma + e.alpha - beta);
            ent.ratio = ent.bound > 0.0 ? ent.measured / ent.bound : 0.0;
            ent.pass = ent.measured <= ent.bound * (1.0 + 1e-9);
            rep.all_pass = rep.all_pass && ent.pass;
            rep.entries.push_back(ent);
        }
    }
    return rep;
}

PolyFit l2_poly_fit(const GridFunction& u, int nu, double z, double r) {
    if (nu < 0 || nu > 2) throw ConfigError("fit degree must be 0, 1, or 2");
    if (!(r > 0.0) || z - r < -u.halfwidth() - 1e-12 ||
        z + r > u.halfwidth() + 1e-12)
        throw ConfigError("fit ball must sit inside the grid window");

    // Legendre coefficients on s = (x - z)/r: c_j = (2j+1)/2 int u(z+rs) P_j(s) ds
    std::array<double, 3> c{};
    for (int j = 0; j <= nu; ++j) {
        double integral = cellwise_integral(u, z - r, z + r, [&](double x) {
            double s = (x - z) / r;
            double pj = j == 0 ? 1.0 : (j == 1 ? s : 0.5 * (3.0 * s * s - 1.0));
            return u.eval(x) * pj;
        });
        c[static_cast<size_t>(j)] = (2.0 * j + 1.0) / 2.0 * integral / r;
    }

    PolyFit fit;
    fit.degree = nu;
    fit.center = z;
    fit.radius = r;
    fit.coef[0] = c[0] - 0.5 * c[2];
    fit.coef[1] = c[1] / r;
    fit.coef[2] = 1.5 * c[2] / (r * r);
    return fit;
}

double l2_residual(const GridFunction& u, const PolyFit& fit) {
    double lo = fit.center - fit.radius, hi = fit.center + fit.radius;
    double q = cellwise_integral(u, lo, hi, [&](double x) {
        double d = u.eval(x) - fit.eval(x);
        return d * d;
    });
    return std::sqrt(std::max(0.0, q));
}

InterpolationReport interpolation_claim_check(const GridFunction& u, double beta,
                                              double beta_prime, int samples) {
    int k = order_floor(beta);
    if (!(beta_prime > k) || !(beta_prime < beta))
        throw ConfigError("intermediate order must lie in (floor(beta), beta)");
    if (samples < 1) throw ConfigError("need at least one center per scale");
    if (u.halfwidth() < 1.0)
        throw ConfigError("claim check needs the grid to cover (-1, 1)");

    InterpolationReport rep;
    rep.lhs = seminorm(u, {beta, -0.5, 0.5, 1});
    double rmin = 16.0 * u.spacing();
    for (double r = 0.5; r >= rmin; r *= 0.5) {
        for (int i = 0; i < samples; ++i) {
            double span = 1.0 - r;
            double z = samples == 1
                           ? 0.0
                           : -span + 2.0 * span * i / (samples - 1);
            double val = seminorm(u, {beta_prime, z - r, z + r, 1});
            rep.rhs_sup = std::max(rep.rhs_sup,
                                   std::pow(r, beta_prime - beta) * val);
        }
    }
    rep.ratio = rep.rhs_sup > 0.0 ? rep.lhs / rep.rhs_sup : 0.0;
    rep.pass = rep.lhs <= rep.rhs_sup * (1.0 + kClaimTol) ||
               (rep.lhs == 0.0 && rep.rhs_sup == 0.0);
    return rep;
}

}  // namespace nlab
