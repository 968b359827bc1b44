#include "nlab/counterexamples.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "nlab/holder.hpp"
#include "nlab/kernels.hpp"
#include "nlab/operators.hpp"
#include "nlab/quadrature.hpp"

namespace nlab {

namespace {

// sum_{k >= 0} [(k+q1)^{-s} - (k+q2)^{-s}] by 64 explicit terms plus the
// Euler-Maclaurin remainder through the third-derivative correction; the
// integral term is written around expm1 so it stays stable across s = 1.
double lattice_power_difference(double s, double q1, double q2) {
    constexpr int kDirect = 64;
    double acc = 0.0;
    for (int k = 0; k < kDirect; ++k)
        acc += std::pow(k + q1, -s) - std::pow(k + q2, -s);
    const double a = kDirect + q1, b = kDirect + q2;
    const double eps = 1.0 - s;
    double integral;
    if (std::abs(eps) < 1e-12) {
        integral = std::log(b / a);
    } else {
        integral = -std::pow(b, eps) * std::expm1(eps * std::log(a / b)) / eps;
    }
    double half = 0.5 * (std::pow(a, -s) - std::pow(b, -s));
    double d1 = s / 12.0 * (std::pow(a, -s - 1.0) - std::pow(b, -s - 1.0));
    double d3 = s * (s + 1.0) * (s + 2.0) / 720.0 *
                (std::pow(a, -s - 3.0) - std::pow(b, -s - 3.0));
    return acc + integral + half + d1 - d3;
}

// Exact image of the outer part under the unscaled resonant operator at x in
// [0, 2): T(x) = int_0^inf (outer(x+y) + outer(x-y)) Y_m(y) y^{-1-sigma} dy.
// The integrand is piecewise constant times a power, so the near field is a
// sum of closed-form power integrals and the far field reduces to lattice
// power sums over one period.
double resonant_image(double sigma, const GridFunction& outer, int m, double x) {
    const double period = 2.0 / m;
    const double ystart = 3.0 + x;

    // Sign-change ordinates of y -> (outer(x+y) + outer(x-y)) Y_m(y) in
    // (lo, hi): the kernel split at 1, the support edges 2 -+ x, the data
    // lattice k/m -+ x past the support edges, and the kernel half-period
    // lattice (2j+1)/(2m) past the split.
    auto flips = [&](double lo, double hi) {
        std::vector<double> pts;
        for (double c : {1.0, 2.0 - x, 2.0 + x})
            if (c > lo && c < hi) pts.push_back(c);
        for (int k = 2 * m;; ++k) {
            double y = static_cast<double>(k) / m - x;
            if (y >= hi) break;
            if (y > lo) pts.push_back(y);
        }
        for (int k = 2 * m;; ++k) {
            double y = static_cast<double>(k) / m + x;
            if (y >= hi) break;
            if (y > lo) pts.push_back(y);
        }
        for (int j = m;; ++j) {
            double y = (2.0 * j + 1.0) / (2.0 * m);
            if (y >= hi) break;
            if (y > lo) pts.push_back(y);
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end(),
                              [](double u, double v) { return v - u < 1e-12; }),
                  pts.end());
        return pts;
    };
    auto modulation = [&](double y) {
        if (y < 1.0) return 1.0;
        // sign cos(m pi y) by floor parity of the half-period index; piece
        // midpoints never land on the lattice
        auto k = static_cast<long long>(std::floor(m * y + 0.5));
        return 2.0 + ((k % 2 == 0) ? 1.0 : -1.0);
    };
    auto piece_value = [&](double a, double b) {
        double ymid = 0.5 * (a + b);
        return (outer.eval(x + ymid) + outer.eval(x - ymid)) * modulation(ymid);
    };

    double total = 0.0;
    std::vector<double> cuts = flips(0.0, ystart);
    cuts.insert(cuts.begin(), 0.0);
    cuts.push_back(ystart);
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double v = piece_value(cuts[i], cuts[i + 1]);
        // exact zeros only; skipping them keeps the y = 0 edge out of the
        // power integral
        if (v != 0.0)
            total += v * quad::power_integral(-1.0 - sigma, cuts[i], cuts[i + 1]);
    }

    cuts = flips(ystart, ystart + period);
    cuts.insert(cuts.begin(), ystart);
    cuts.push_back(ystart + period);
    const double scale = std::pow(period, -sigma) / sigma;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double v = piece_value(cuts[i], cuts[i + 1]);
        if (v != 0.0)
            total += v * scale * lattice_power_difference(sigma, cuts[i] / period,
                                                          cuts[i + 1] / period);
    }
    return total;
}

TailSpec oscillating_exterior(int m) {
    return TailSpec::sign_sin_with_collar(1.0, 2.0, static_cast<double>(m));
}

// [L inner]_{C^{alpha/2}(-1/4, 1/4)} over the norms that control it, with L
// the frequency-matched kernel and the image rescaled to the unscaled
// operator (the engine carries a (2 - sigma) factor).
double image_regularity_ratio(const CounterexampleConfig& cfg,
                              const GridFunction& inner, int m) {
    const KernelSpec k = KernelSpec::sign_cos(cfg.sigma, static_cast<double>(m));
    constexpr int kSamples = 13;
    double xs[kSamples], lv[kSamples];
    for (int i = 0; i < kSamples; ++i) {
        xs[i] = -0.24 + 0.04 * i;
        lv[i] = linear_apply(inner, k, xs[i], cfg.quad) / (2.0 - cfg.sigma);
    }
    const double aprime = 0.5 * cfg.alpha;
    double semi = 0.0;
    for (int i = 0; i < kSamples; ++i)
        for (int j = i + 1; j < kSamples; ++j)
            semi = std::max(semi, std::abs(lv[i] - lv[j]) /
                                      std::pow(xs[j] - xs[i], aprime));
    double sup_all = 0.0, sup_half = 0.0;
    for (int i = 0; i < inner.size(); ++i) {
        double v = std::abs(inner.value(i));
        sup_all = std::max(sup_all, v);
        if (std::abs(inner.node(i)) <= 0.5) sup_half = std::max(sup_half, v);
    }
    double norm_window =
        sup_half + seminorm(inner, {.beta = cfg.sigma + cfg.alpha, .a = -0.5, .b = 0.5});
    // inner vanishes outside the window and is continuous at the edges, so
    // the global alpha norm is carried by (-1, 1)
    double norm_global = sup_all + seminorm(inner, {.beta = cfg.alpha, .a = -1.0, .b = 1.0});
    return semi / (norm_window + norm_global);
}

BlowupRow make_row(const CounterexampleConfig& cfg, const SolveReport& sol, int m) {
    const GridFunction& u = sol.solution;
    BlowupRow row;
    row.m = m;
    row.residual = sol.residual;
    for (double v : u.values()) row.sup_norm = std::max(row.sup_norm, std::abs(v));
    row.calpha = seminorm(u, {.beta = cfg.alpha, .a = -1.0, .b = 1.0});
    row.csigma_alpha =
        seminorm(u, {.beta = cfg.sigma + cfg.alpha, .a = -0.5, .b = 0.5});

    SplitSolution parts = split_solution(u, m);
    OscillationReport osc = oscillation_identities(cfg.sigma, parts.outer, m);
    row.id_at_zero = osc.at_zero;
    row.id_at_half = osc.at_half;
    row.id_deviation = osc.deviation;
    row.claim_ratio = image_regularity_ratio(cfg, parts.inner, m);

    // Boundary envelope at the Dirichlet rate; the data vanish on the collar,
    // so sigma/2 decay holds with room to spare.
    BarrierCheck bc = barrier_check(u, 0.5 * cfg.sigma, 0.25, 1.0);
    row.barrier_C = bc.C;
    row.barrier_pass = bc.pass;

    if (cfg.kind == CounterexampleConfig::Kind::Nonlinear) {
        NonlinearReport nr = nonlinear_identities(u, m, cfg.bounds);
        row.u_at_zero = nr.u_at_zero;
        row.headroom = nr.headroom;
        row.weights_ok = nr.weight_at_zero_ok && nr.weight_at_half_ok;
    }
    return row;
}

}  // namespace

void CounterexampleConfig::validate() const {
    (void)HolderExponents(sigma, alpha);  // rejects bad order or gauge
    if (ms.empty())
        throw ConfigError("counterexample sweep needs at least one frequency");
    int mmax = 0;
    for (int m : ms) {
        if (m < 1) throw ConfigError("frequencies must be positive integers");
        mmax = std::max(mmax, m);
    }
    if (resolution < 8 * mmax)
        throw ConfigError("resolution below eight cells per half period");
}

DirichletProblem build_linear(const CounterexampleConfig& cfg, int m) {
    cfg.validate();
    DirichletProblem p;
    p.family.members.push_back(
        {KernelSpec::sign_cos(cfg.sigma, static_cast<double>(m)), {}, 0.0});
    p.family.bounds = EllipticityParams(1.0, 3.0);
    p.exterior = oscillating_exterior(m);
    p.resolution = cfg.resolution;
    p.quad = cfg.quad;
    p.tolerance = cfg.tolerance;
    p.max_iterations = cfg.max_iterations;
    p.threads = cfg.threads;
    return p;
}

DirichletProblem build_nonlinear(const CounterexampleConfig& cfg, int m) {
    cfg.validate();
    DirichletProblem p;
    p.family.members.push_back({KernelSpec::flat(cfg.sigma), {}, 0.0});
    p.family.bounds = cfg.bounds;
    p.extremal = ExtremalSign::Plus;
    p.exterior = oscillating_exterior(m);
    p.resolution = cfg.resolution;
    p.quad = cfg.quad;
    p.tolerance = cfg.tolerance;
    p.max_iterations = cfg.max_iterations;
    p.threads = cfg.threads;
    return p;
}

SplitSolution split_solution(const GridFunction& um, int m) {
    if (m < 1) throw ConfigError("frequency must be a positive integer");
    if (std::abs(um.halfwidth() - 1.0) > 1e-12)
        throw ConfigError("split expects the unit solve window");
    GridFunction inner(um.halfwidth(), um.spacing(), um.values(),
                       TailSpec::zero(um.halfwidth()));
    int nodes = 2 * static_cast<int>(std::lround(2.0 / um.spacing())) + 1;
    GridFunction outer(
        2.0, um.spacing(), std::vector<double>(static_cast<size_t>(nodes), 0.0),
        TailSpec::uniform(2.0, TailFormula::of(TailAtom::sign_sin(
                                   1.0, static_cast<double>(m)))));
    return {std::move(inner), std::move(outer)};
}

OscillationReport oscillation_identities(double sigma, const GridFunction& outer,
                                         int m) {
    if (!(sigma > 0.0) || !(sigma < 2.0))
        throw ConfigError("order sigma must lie in (0,2)");
    if (m < 1) throw ConfigError("frequency must be a positive integer");
    OscillationReport r;
    r.m = m;
    r.at_zero = resonant_image(sigma, outer, m, 0.0);
    r.at_half = resonant_image(sigma, outer, m, 0.5 / m);
    r.constant = std::exp2(1.0 - sigma) / sigma;
    r.deviation = std::abs(r.at_half - r.constant);
    return r;
}

NonlinearReport nonlinear_identities(const GridFunction& um, int m,
                                     const EllipticityParams& bounds) {
    if (m < 1) throw ConfigError("frequency must be a positive integer");
    NonlinearReport r;
    r.m = m;
    r.u_at_zero = um.eval(0.0);
    double peak = 0.0;
    for (int i = 0; i < um.size(); ++i)
        if (std::abs(um.node(i)) <= 0.5) peak = std::max(peak, um.value(i));
    r.headroom = 1.0 - peak;

    // plus-side optimum: Lambda where the centered second difference is
    // positive, lambda otherwise
    auto weight = [&](double x, double y) {
        return second_difference(um, x, y) > 0.0 ? bounds.Lambda : bounds.lambda;
    };
    // irrational offsets keep every probe off the data's sign lattice for
    // every m, where the odd exterior cancels exactly
    r.weight_at_zero_ok = true;
    for (double y : {2.0 + M_1_PI, M_PI, 5.0 - 1.0 / M_E, 7.0 + M_1_PI})
        r.weight_at_zero_ok = r.weight_at_zero_ok && weight(0.0, y) == bounds.lambda;

    // past the collar, integer multiples of 1/m beyond 2 alternate the cosine
    // sign exactly: even multiples give +1, odd give -1
    const double xh = 0.5 / m;
    r.weight_at_half_ok = true;
    for (int j = 0; j < 4; ++j) {
        double yplus = 2.0 + (2.0 + 2.0 * j) / m;
        double yminus = 2.0 + (3.0 + 2.0 * j) / m;
        r.weight_at_half_ok = r.weight_at_half_ok &&
                              weight(xh, yplus) == bounds.Lambda &&
                              weight(xh, yminus) == bounds.lambda;
    }
    return r;
}

BlowupReport blowup_sweep(const CounterexampleConfig& cfg) {
    cfg.validate();
    const int n = static_cast<int>(cfg.ms.size());
    BlowupReport rep{cfg, std::vector<BlowupRow>(static_cast<size_t>(n))};

    auto run_one = [&](int idx, int solver_threads) {
        int m = cfg.ms[static_cast<size_t>(idx)];
        DirichletProblem p = cfg.kind == CounterexampleConfig::Kind::Linear
                                 ? build_linear(cfg, m)
                                 : build_nonlinear(cfg, m);
        p.threads = solver_threads;
        SolveReport sol = cfg.kind == CounterexampleConfig::Kind::Linear
                              ? solve_linear_dirichlet(p)
                              : solve_bellman_dirichlet(p);
        rep.rows[static_cast<size_t>(idx)] = make_row(cfg, sol, m);
    };

    if (cfg.threads > 1 && n > 1) {
        // one solver thread per frequency; the outer pool carries the width
        std::atomic<int> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        int workers = std::min(cfg.threads, n);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    try {
                        run_one(i, 1);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    } else {
        for (int i = 0; i < n; ++i) run_one(i, std::max(1, cfg.threads));
    }
    return rep;
}

}  // namespace nlab
