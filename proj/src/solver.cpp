// Monotone quadrature discretization of the Dirichlet problems: hat-function
// cell weights away from the origin, a curvature stencil on the first cell,
// and synthetic far-field probes that hand every exterior tail to the shared
// operator evaluators.  Every matrix built here must come out strictly
// diagonally dominant with nonnegative off-diagonal entries; the assembly
// audits that row by row instead of assuming it.

#include "nlab/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <utility>

#include "nlab/quadrature.hpp"

namespace nlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

double eval_cost(const std::function<double(double)>& c, double x) {
    return c ? c(x) : 0.0;
}

// Kernel without its x factor: (2 - sigma) Y(y) y^{-1-sigma}.
double ktilde(const KernelSpec& k, double y) {
    return (2.0 - k.sigma) * k.y_profile(y) * std::pow(y, -1.0 - k.sigma);
}

// Runs body(0..count-1) on up to `threads` workers; rethrows the first error.
void parallel_rows(int count, int threads, const std::function<void(int)>& body) {
    threads = std::min(std::max(threads, 1), std::max(count, 1));
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mu;
    std::exception_ptr first;
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first) first = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

// ---- grid bookkeeping ------------------------------------------------------

struct Grid {
    int n = 0;      // cells per unit length; the window [-1,1] holds 2n cells
    double h = 0.0;
    int N = 0;      // interior unknowns, nodes 1 .. 2n-1
    double g_left = 0.0, g_right = 0.0;  // Dirichlet data owned by nodes 0, 2n
};

Grid make_grid(const DirichletProblem& p, double sigma) {
    if (p.resolution < 8)
        throw ConfigError("resolution must be at least 8 cells per unit length");
    if (p.resolution > 4096)
        throw ConfigError("resolution exceeds the dense-assembly range");
    if (!(p.tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
    if (p.max_iterations < 1) throw ConfigError("max_iterations must be positive");
    p.exterior.validate(1.0);
    double gr = p.exterior.growth();
    if (gr >= sigma) throw DivergentTail("exterior data outgrows the kernel tail");
    if (gr > 0.0) throw ConfigError("exterior data must stay bounded");
    Grid g;
    g.n = p.resolution;
    g.h = 1.0 / g.n;
    g.N = 2 * g.n - 1;
    // Boundary nodes carry the one-sided limits of the exterior data.
    g.g_right = p.exterior.piece_at(1.0).formula.eval(1.0);
    g.g_left = p.exterior.piece_at(std::nextafter(-1.0, -kInf)).formula.eval(-1.0);
    return g;
}

// ---- kernel cell moments ----------------------------------------------------

// Hat-weight integrals on cell m = [m h, (m+1) h]:
//   a_m = int ((m+1)h - y)/h Ktilde,   b_m = int (y - m h)/h Ktilde,
// and the curvature moment s0 = int_0^h y^2 Ktilde, which absorbs the kernel
// singularity (y^{1-sigma} is integrable for every admissible order).
struct CellMoments {
    std::vector<double> a, b;  // cell m stored at index m-1
    double s0 = 0.0;
};

CellMoments cell_moments(const KernelSpec& k, int maxm, double h) {
    CellMoments cm;
    cm.a.assign(static_cast<size_t>(maxm), 0.0);
    cm.b.assign(static_cast<size_t>(maxm), 0.0);
    double s = k.sigma;
    if (k.piecewise_const_in_y()) {
        std::vector<double> cuts;
        for (int m = 1; m <= maxm; ++m) {
            double lo = m * h, hi = (m + 1) * h;
            cuts.assign({lo, hi});
            k.append_y_breakpoints(lo, hi, cuts);
            std::sort(cuts.begin(), cuts.end());
            double am = 0.0, bm = 0.0;
            for (size_t j = 0; j + 1 < cuts.size(); ++j) {
                double c = cuts[j], d = cuts[j + 1];
                if (d - c < 1e-15) continue;
                double v = (2.0 - s) * k.y_profile(0.5 * (c + d));
                am += v * quad::affine_power_integral(m + 1.0, -1.0 / h, -1.0 - s, c, d);
                bm += v * quad::affine_power_integral(-static_cast<double>(m), 1.0 / h,
                                                      -1.0 - s, c, d);
            }
            cm.a[static_cast<size_t>(m - 1)] = am;
            cm.b[static_cast<size_t>(m - 1)] = bm;
        }
        cuts.assign({0.0, h});
        k.append_y_breakpoints(0.0, h, cuts);
        std::sort(cuts.begin(), cuts.end());
        for (size_t j = 0; j + 1 < cuts.size(); ++j) {
            double c = cuts[j], d = cuts[j + 1];
            if (d - c < 1e-15) continue;
            cm.s0 += (2.0 - s) * k.y_profile(0.5 * (c + d)) *
                     quad::power_integral(1.0 - s, c, d);
        }
    } else {
        // Smooth cosine modulation: graded Gauss panels per cell.
        for (int m = 1; m <= maxm; ++m) {
            double lo = m * h, hi = (m + 1) * h;
            int panels = m <= 2 ? 4 : (m <= 8 ? 2 : 1);
            double am = 0.0, bm = 0.0;
            for (int q = 0; q < panels; ++q) {
                double c = lo + (hi - lo) * q / panels;
                double d = lo + (hi - lo) * (q + 1) / panels;
                am += quad::gl(c, d, 16, [&](double y) {
                    return ((m + 1.0) - y / h) * ktilde(k, y);
                });
                bm += quad::gl(c, d, 16,
                               [&](double y) { return (y / h - m) * ktilde(k, y); });
            }
            cm.a[static_cast<size_t>(m - 1)] = am;
            cm.b[static_cast<size_t>(m - 1)] = bm;
        }
        // int_0^h y^{1-s} (base + amp cos(wave y)): expand the cosine so each
        // term is an exact power moment; the series converges factorially.
        double acc = k.base * quad::power_integral(1.0 - s, 0.0, h);
        double fac = 1.0;  // (-1)^j wave^{2j} / (2j)!
        for (int j = 0; j < 80; ++j) {
            if (j > 0) fac *= -(k.wave * k.wave) / ((2.0 * j) * (2.0 * j - 1.0));
            double term = k.amp * fac * quad::power_integral(1.0 - s + 2.0 * j, 0.0, h);
            acc += term;
            if (std::abs(term) < 1e-18 * std::abs(acc) + 1e-300) break;
        }
        cm.s0 = (2.0 - s) * acc;
    }
    for (size_t m = 0; m < cm.a.size(); ++m) {
        double scale = 1.0 + std::abs(cm.a[m]) + std::abs(cm.b[m]);
        if (cm.a[m] < -1e-12 * scale || cm.b[m] < -1e-12 * scale)
            throw NonDominantMatrix("cell quadrature produced a negative hat weight");
        cm.a[m] = std::max(cm.a[m], 0.0);
        cm.b[m] = std::max(cm.b[m], 0.0);
    }
    if (!(cm.s0 > 0.0))
        throw NonDominantMatrix("first-cell curvature weight must be positive");
    return cm;
}

// ---- exterior data terms ----------------------------------------------------

// int over [lo, hi] of g(x_i +- y) Ktilde(y), for a cell that lies entirely
// outside the window on the chosen side.  Gauss panels are split at both the
// kernel breakpoints and the data's own discontinuity lattice, so each panel
// integrand is smooth; Gauss nodes are interior, which keeps evaluation off
// the half-open piece edges.
double exterior_cell_integral(const TailSpec& g, const KernelSpec& k, double xi,
                              bool right, double lo, double hi) {
    std::vector<double> cuts{lo, hi};
    k.append_y_breakpoints(lo, hi, cuts);
    std::vector<double> tcuts;
    if (right)
        g.append_breakpoints(xi + lo, xi + hi, tcuts);
    else
        g.append_breakpoints(xi - hi, xi - lo, tcuts);
    for (double t : tcuts) {
        double y = right ? t - xi : xi - t;
        if (y > lo + 1e-14 && y < hi - 1e-14) cuts.push_back(y);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (size_t j = 0; j + 1 < cuts.size(); ++j) {
        double c = cuts[j], d = cuts[j + 1];
        if (d - c < 1e-15) continue;
        total += quad::gl(c, d, 16, [&](double y) {
            return g.eval(right ? xi + y : xi - y) * ktilde(k, y);
        });
    }
    return total;
}

// The symmetrized exterior data seen from x: ghat(s) = (g(x+s) + g(x-s)) / 2,
// assembled as exact formula pieces on |s| >= Y (Y = 1 + |x|, where both
// arguments of the second difference have left the window).  Feeding this to
// a constant-valued probe grid turns the whole deep tail into one evaluator
// call at the origin.
TailSpec hat_average_tail(const TailSpec& g, double x, double Y) {
    std::vector<double> edges{Y};
    for (const auto& pc : g.pieces) {
        for (double c : {pc.lo - x, pc.hi - x, x - pc.lo, x - pc.hi})
            if (std::isfinite(c) && c > Y + 1e-13) edges.push_back(c);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](double a, double b) { return b - a < 1e-13; }),
                edges.end());
    size_t K = edges.size() - 1;
    std::vector<TailFormula> fs;
    fs.reserve(K + 1);
    for (size_t j = 0; j <= K; ++j) {
        double mid = j < K ? 0.5 * (edges[j] + edges[j + 1]) : edges[K] + 1.0;
        TailFormula fr = g.piece_at(x + mid).formula.shifted(x).scaled(0.5);
        TailFormula fl = g.piece_at(x - mid).formula.reflected().shifted(-x).scaled(0.5);
        fs.push_back(fr.plus(fl));
    }
    TailSpec t;
    t.pieces.push_back({-kInf, -edges[K], fs[K].reflected()});
    for (size_t j = K; j-- > 0;)
        t.pieces.push_back({-edges[j + 1], -edges[j], fs[j].reflected()});
    for (size_t j = 0; j + 1 <= K; ++j)
        t.pieces.push_back({edges[j], edges[j + 1], fs[j]});
    t.pieces.push_back({edges[K], kInf, fs[K]});
    return t;
}

// Constant-interior probe: its second difference vanishes identically inside
// [-Y, Y] and equals (tail - offset) beyond, so applying an operator to it at
// the origin integrates exactly the deep-tail remainder of a solver row.
GridFunction tail_probe(double Y, double offset, TailSpec tail) {
    return GridFunction(Y, Y / 8.0, std::vector<double>(17, offset), std::move(tail));
}

QuadratureConfig probe_cfg(const QuadratureConfig& base) {
    QuadratureConfig c = base;
    c.r0 = 0.0;
    c.mid_panels = std::max(1, base.mid_panels);
    c.tol = std::min(base.tol, 1e-11);
    return c;
}

// ---- linear assembly ---------------------------------------------------------

struct LinearSystem {
    Eigen::MatrixXd M;      // N x N, rows are nodes 1 .. 2n-1
    Eigen::VectorXd r;      // equation is M u + r = 0
    Eigen::VectorXd margin; // per-row far-field mass, the dominance slack floor
};

LinearSystem assemble_member(const KernelSpec& k,
                             const std::function<double(double)>& cost,
                             const DirichletProblem& p, const Grid& g) {
    int n = g.n, N = g.N;
    double h = g.h;
    CellMoments cm = cell_moments(k, 2 * n - 2, h);

    std::vector<double> vg(static_cast<size_t>(N)), v1(static_cast<size_t>(N));
    QuadratureConfig dcfg = probe_cfg(p.quad);
    parallel_rows(N, p.threads, [&](int row) {
        int i = row + 1;
        double xi = -1.0 + h * i;
        double Y = h * std::max(i, 2 * n - i);
        GridFunction probe = tail_probe(Y, 0.0, hat_average_tail(p.exterior, xi, Y));
        vg[static_cast<size_t>(row)] = linear_apply(probe, k, 0.0, dcfg);
        GridFunction unit = tail_probe(Y, 0.0, TailSpec::constant(Y, 1.0));
        v1[static_cast<size_t>(row)] = linear_apply(unit, k, 0.0, dcfg);
        if (!(v1[static_cast<size_t>(row)] > 0.0))
            throw NonDominantMatrix("far-field mass must be positive");
    });

    LinearSystem sys{Eigen::MatrixXd::Zero(N, N), Eigen::VectorXd::Zero(N),
                     Eigen::VectorXd::Zero(N)};
    parallel_rows(N, p.threads, [&](int row) {
        int i = row + 1;
        double xi = -1.0 + h * i;
        double xf = k.x_factor(xi);
        int mdeep = std::max(i, 2 * n - i);
        double diag = 0.0, rhs = 0.0;
        auto add_node = [&](int node, double w) {
            if (node == 0)
                rhs += w * g.g_left;
            else if (node == 2 * n)
                rhs += w * g.g_right;
            else
                sys.M(row, node - 1) += w;
        };
        double wn = xf * cm.s0 / (h * h);
        add_node(i + 1, wn);
        add_node(i - 1, wn);
        diag -= 2.0 * wn;
        for (int m = 1; m < mdeep; ++m) {
            double am = xf * cm.a[static_cast<size_t>(m - 1)];
            double bm = xf * cm.b[static_cast<size_t>(m - 1)];
            double lo = m * h, hi = (m + 1) * h;
            if (m <= 2 * n - i - 1) {
                add_node(i + m, am);
                add_node(i + m + 1, bm);
            } else {
                rhs += xf * exterior_cell_integral(p.exterior, k, xi, true, lo, hi);
            }
            diag -= am + bm;
            if (m <= i - 1) {
                add_node(i - m, am);
                add_node(i - m - 1, bm);
            } else {
                rhs += xf * exterior_cell_integral(p.exterior, k, xi, false, lo, hi);
            }
            diag -= am + bm;
        }
        rhs += xf * vg[static_cast<size_t>(row)];
        diag -= xf * v1[static_cast<size_t>(row)];
        rhs += eval_cost(cost, xi);
        sys.M(row, row) = diag;
        sys.r(row) = rhs;
        sys.margin(row) = xf * v1[static_cast<size_t>(row)];
    });

    for (int row = 0; row < N; ++row) {
        double offsum = sys.M.row(row).sum() - sys.M(row, row);
        double slack = -sys.M(row, row) - offsum;
        if (!(slack > 0.25 * sys.margin(row)))
            throw NonDominantMatrix("assembled row lost its dominance slack");
    }
    return sys;
}

// Direct factorization up to 4096 unknowns; Jacobi sweeps (guaranteed by the
// strict dominance) beyond that, where a dense LU would not fit comfortably.
Eigen::VectorXd solve_dominant(const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs,
                               double tol) {
    if (M.rows() <= 4096) return Eigen::PartialPivLU<Eigen::MatrixXd>(M).solve(rhs);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(M.rows());
    Eigen::VectorXd d = M.diagonal();
    for (int it = 0; it < 500000; ++it) {
        Eigen::VectorXd res = rhs - M * u;
        if (res.lpNorm<Eigen::Infinity>() <= 0.5 * tol) return u;
        u += res.cwiseQuotient(d);
    }
    throw MaxIterations("relaxation sweeps did not reach the requested residual");
}

GridFunction wrap_solution(const Eigen::VectorXd& u, const DirichletProblem& p,
                           const Grid& g) {
    std::vector<double> vals(static_cast<size_t>(2 * g.n + 1));
    vals.front() = g.g_left;
    vals.back() = g.g_right;
    for (int i = 1; i <= 2 * g.n - 1; ++i) vals[static_cast<size_t>(i)] = u(i - 1);
    return GridFunction(1.0, g.h, std::move(vals), p.exterior);
}

double pick_multiplier(ExtremalSign s, double lam, double Lam, double d2) {
    bool pos = d2 >= 0.0;
    if (s == ExtremalSign::Minus) return pos ? lam : Lam;
    return pos ? Lam : lam;
}

// ---- extremal Howard state ---------------------------------------------------

struct ExtremalWork {
    Grid g;
    CellMoments cm;                      // flat-kernel moments
    KernelSpec flat;
    double sigma = 0.0, lam = 1.0, Lam = 1.0;
    ExtremalSign sign = ExtremalSign::Minus;
    std::function<double(double)> cost;
    std::vector<TailSpec> ghat;          // per-row symmetrized exterior
    std::vector<double> Y;               // per-row deep-tail start 1 + |x_i|
    std::vector<double> base_mass;       // flat tail mass 2(2-s) int_Y^inf y^{-1-s}
    std::vector<std::vector<double>> gcr, gcl;  // per-row exterior cell integrals
    QuadratureConfig dcfg;
};

double deep_extremal(const ExtremalWork& w, int row, double offset) {
    GridFunction probe = tail_probe(w.Y[static_cast<size_t>(row)], offset,
                                    w.ghat[static_cast<size_t>(row)]);
    return extremal_apply(probe, w.sign, EllipticityParams{w.lam, w.Lam}, w.sigma, 0.0,
                          w.dcfg);
}

// One multiplier per (row, cell); the deep tail enters linearized around the
// current center value with the envelope slope, clamped into the admissible
// band so quadrature noise can never break the row's dominance.
void extremal_system(const ExtremalWork& w,
                     const std::vector<std::vector<double>>& mult,
                     const Eigen::VectorXd& off, const std::vector<double>& deep,
                     const std::vector<double>& slope, Eigen::MatrixXd& M,
                     Eigen::VectorXd& r) {
    int n = w.g.n, N = w.g.N;
    double h = w.g.h;
    M.setZero();
    r.setZero();
    for (int row = 0; row < N; ++row) {
        int i = row + 1;
        double xi = -1.0 + h * i;
        int mdeep = std::max(i, 2 * n - i);
        const auto& mrow = mult[static_cast<size_t>(row)];
        double diag = 0.0, rhs = 0.0;
        auto add_node = [&](int node, double wgt) {
            if (node == 0)
                rhs += wgt * w.g.g_left;
            else if (node == 2 * n)
                rhs += wgt * w.g.g_right;
            else
                M(row, node - 1) += wgt;
        };
        double wn = mrow[0] * w.cm.s0 / (h * h);
        add_node(i + 1, wn);
        add_node(i - 1, wn);
        diag -= 2.0 * wn;
        for (int m = 1; m < mdeep; ++m) {
            double mm = mrow[static_cast<size_t>(m)];
            double am = mm * w.cm.a[static_cast<size_t>(m - 1)];
            double bm = mm * w.cm.b[static_cast<size_t>(m - 1)];
            if (m <= 2 * n - i - 1) {
                add_node(i + m, am);
                add_node(i + m + 1, bm);
            } else {
                rhs += mm * w.gcr[static_cast<size_t>(row)][static_cast<size_t>(m)];
            }
            diag -= am + bm;
            if (m <= i - 1) {
                add_node(i - m, am);
                add_node(i - m - 1, bm);
            } else {
                rhs += mm * w.gcl[static_cast<size_t>(row)][static_cast<size_t>(m)];
            }
            diag -= am + bm;
        }
        diag -= slope[static_cast<size_t>(row)];
        rhs += deep[static_cast<size_t>(row)] +
               slope[static_cast<size_t>(row)] * off(row);
        rhs += eval_cost(w.cost, xi);
        M(row, row) = diag;
        r(row) = rhs;
    }
}

SolveReport solve_bellman_extremal(const DirichletProblem& p) {
    if (p.family.members.empty())
        throw ConfigError("extremal solve reads order and cost from one family member");
    double sigma = p.family.members[0].kernel.sigma;
    const EllipticityParams& eb = p.family.bounds;
    if (!(eb.lambda > 0.0) || !(eb.Lambda >= eb.lambda))
        throw ConfigError("ellipticity bounds must satisfy 0 < lambda <= Lambda");
    Grid g = make_grid(p, sigma);
    int n = g.n, N = g.N;
    double h = g.h;

    ExtremalWork w;
    w.g = g;
    w.flat = KernelSpec::flat(sigma);
    w.cm = cell_moments(w.flat, 2 * n - 2, h);
    w.sigma = sigma;
    w.lam = eb.lambda;
    w.Lam = eb.Lambda;
    w.sign = *p.extremal;
    w.cost = p.family.members[0].cost;
    w.dcfg = probe_cfg(p.quad);
    w.ghat.reserve(static_cast<size_t>(N));
    w.Y.resize(static_cast<size_t>(N));
    w.base_mass.resize(static_cast<size_t>(N));
    w.gcr.assign(static_cast<size_t>(N), {});
    w.gcl.assign(static_cast<size_t>(N), {});
    for (int row = 0; row < N; ++row) {
        int i = row + 1;
        double xi = -1.0 + h * i;
        double Y = h * std::max(i, 2 * n - i);
        w.Y[static_cast<size_t>(row)] = Y;
        w.base_mass[static_cast<size_t>(row)] =
            2.0 * (2.0 - sigma) * quad::power_integral(-1.0 - sigma, Y, kInf);
        w.ghat.push_back(hat_average_tail(p.exterior, xi, Y));
    }
    parallel_rows(N, p.threads, [&](int row) {
        int i = row + 1;
        double xi = -1.0 + h * i;
        int mdeep = std::max(i, 2 * n - i);
        auto& right = w.gcr[static_cast<size_t>(row)];
        auto& left = w.gcl[static_cast<size_t>(row)];
        right.assign(static_cast<size_t>(mdeep), 0.0);
        left.assign(static_cast<size_t>(mdeep), 0.0);
        for (int m = 1; m < mdeep; ++m) {
            double lo = m * h, hi = (m + 1) * h;
            if (m > 2 * n - i - 1)
                right[static_cast<size_t>(m)] =
                    exterior_cell_integral(p.exterior, w.flat, xi, true, lo, hi);
            if (m > i - 1)
                left[static_cast<size_t>(m)] =
                    exterior_cell_integral(p.exterior, w.flat, xi, false, lo, hi);
        }
    });

    std::vector<std::vector<double>> mult(static_cast<size_t>(N));
    for (int row = 0; row < N; ++row) {
        int i = row + 1;
        mult[static_cast<size_t>(row)].assign(
            static_cast<size_t>(std::max(i, 2 * n - i)), w.lam);
    }

    Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
    std::vector<double> deep(static_cast<size_t>(N));
    parallel_rows(N, p.threads,
                  [&](int row) { deep[static_cast<size_t>(row)] = deep_extremal(w, row, 0.0); });

    Eigen::MatrixXd M(N, N);
    Eigen::VectorXd r(N);
    std::vector<double> slope(static_cast<size_t>(N));
    std::vector<int> ptrace;
    std::vector<double> rtrace;
    Eigen::VectorXd u_prev;
    bool have_prev = false;
    double defect = 0.0;

    for (int it = 1; it <= p.max_iterations; ++it) {
        parallel_rows(N, p.threads, [&](int row) {
            double o = u(row);
            double step = 1e-4 * (1.0 + std::abs(o));
            double ep = deep_extremal(w, row, o + step);
            double em = deep_extremal(w, row, o - step);
            double t = -(ep - em) / (2.0 * step);
            double bm = w.base_mass[static_cast<size_t>(row)];
            slope[static_cast<size_t>(row)] = std::clamp(t, w.lam * bm, w.Lam * bm);
        });
        extremal_system(w, mult, u, deep, slope, M, r);
        Eigen::VectorXd un = Eigen::PartialPivLU<Eigen::MatrixXd>(M).solve(-r);

        if (have_prev) {
            for (int row = 0; row < N; ++row) {
                double viol = w.sign == ExtremalSign::Minus ? un(row) - u_prev(row)
                                                            : u_prev(row) - un(row);
                defect = std::max(defect, viol);
            }
        }

        std::vector<double> deep_new(static_cast<size_t>(N));
        parallel_rows(N, p.threads, [&](int row) {
            deep_new[static_cast<size_t>(row)] = deep_extremal(w, row, un(row));
        });
        Eigen::VectorXd lin_res = M * un + r;
        double res = 0.0;
        for (int row = 0; row < N; ++row) {
            double exact = lin_res(row) -
                           (deep[static_cast<size_t>(row)] +
                            slope[static_cast<size_t>(row)] * (u(row) - un(row))) +
                           deep_new[static_cast<size_t>(row)];
            res = std::max(res, std::abs(exact));
        }

        std::vector<double> vals(static_cast<size_t>(2 * n + 1));
        vals.front() = g.g_left;
        vals.back() = g.g_right;
        for (int i = 1; i <= 2 * n - 1; ++i) vals[static_cast<size_t>(i)] = un(i - 1);
        GridFunction U(1.0, h, vals, p.exterior);
        int changed = 0;
        for (int row = 0; row < N; ++row) {
            int i = row + 1;
            double xi = -1.0 + h * i;
            int mdeep = std::max(i, 2 * n - i);
            auto& mrow = mult[static_cast<size_t>(row)];
            double d2n = vals[static_cast<size_t>(i + 1)] -
                         2.0 * vals[static_cast<size_t>(i)] +
                         vals[static_cast<size_t>(i - 1)];
            double want = pick_multiplier(w.sign, w.lam, w.Lam, d2n);
            if (want != mrow[0]) {
                mrow[0] = want;
                ++changed;
            }
            for (int m = 1; m < mdeep; ++m) {
                double ym = (m + 0.5) * h;
                double d2 = 0.5 * (U.eval(xi + ym) + U.eval(xi - ym)) - un(row);
                want = pick_multiplier(w.sign, w.lam, w.Lam, d2);
                if (want != mrow[static_cast<size_t>(m)]) {
                    mrow[static_cast<size_t>(m)] = want;
                    ++changed;
                }
            }
        }
        ptrace.push_back(changed);
        rtrace.push_back(res);
        u_prev = un;
        have_prev = true;
        u = un;
        deep = deep_new;
        if (changed == 0 && res <= p.tolerance) {
            return SolveReport{
                .solution = wrap_solution(u, p, g),
                .residual = res,
                .iterations = it,
                .policy_trace = std::move(ptrace),
                .contraction_factors = {},
                .residual_trace = std::move(rtrace),
                .howard_defect = defect,
            };
        }
    }
    throw MaxIterations("extremal policy iteration did not settle");
}

SolveReport solve_bellman_finite(const DirichletProblem& p) {
    p.family.validate();
    double sigma = p.family.sigma();
    Grid g = make_grid(p, sigma);
    int N = g.N;
    int A = static_cast<int>(p.family.members.size());

    std::vector<LinearSystem> sys;
    sys.reserve(static_cast<size_t>(A));
    for (const auto& mem : p.family.members)
        sys.push_back(assemble_member(mem.kernel, mem.cost, p, g));

    std::vector<int> pi(static_cast<size_t>(N), 0);
    Eigen::MatrixXd Mmix(N, N);
    Eigen::VectorXd rmix(N);
    std::vector<int> ptrace;
    std::vector<double> rtrace;
    Eigen::VectorXd u_prev;
    bool have_prev = false;
    double defect = 0.0;

    for (int it = 1; it <= p.max_iterations; ++it) {
        for (int row = 0; row < N; ++row) {
            const LinearSystem& s = sys[static_cast<size_t>(pi[static_cast<size_t>(row)])];
            Mmix.row(row) = s.M.row(row);
            rmix(row) = s.r(row);
        }
        Eigen::VectorXd u = solve_dominant(Mmix, -rmix, p.tolerance);

        if (have_prev) {
            // The minimization problem must descend once policies start
            // improving; record the worst climb as the Howard defect.
            defect = std::max(defect, (u - u_prev).maxCoeff());
        }

        std::vector<Eigen::VectorXd> q;
        q.reserve(static_cast<size_t>(A));
        for (int a = 0; a < A; ++a)
            q.push_back(sys[static_cast<size_t>(a)].M * u + sys[static_cast<size_t>(a)].r);

        int changed = 0;
        double res = 0.0;
        for (int row = 0; row < N; ++row) {
            int best = 0;
            double bestq = q[0](row);
            for (int a = 1; a < A; ++a) {
                if (q[static_cast<size_t>(a)](row) < bestq) {
                    bestq = q[static_cast<size_t>(a)](row);
                    best = a;
                }
            }
            if (bestq < q[static_cast<size_t>(pi[static_cast<size_t>(row)])](row)) {
                pi[static_cast<size_t>(row)] = best;
                ++changed;
            }
            res = std::max(res, std::abs(bestq));
        }
        ptrace.push_back(changed);
        rtrace.push_back(res);
        u_prev = u;
        have_prev = true;
        if (changed == 0 && res <= p.tolerance) {
            return SolveReport{
                .solution = wrap_solution(u, p, g),
                .residual = res,
                .iterations = it,
                .policy_trace = std::move(ptrace),
                .contraction_factors = {},
                .residual_trace = std::move(rtrace),
                .howard_defect = defect,
            };
        }
    }
    throw MaxIterations("policy iteration did not settle");
}

// ---- deviation mass for the contraction step ---------------------------------

// Rescaled deviation of the mollified kernel from the flat reference:
// dev(yh) = K_eps(z, delta yh) (delta yh)^{1+sigma} / (2-sigma) - 1, which is
// exactly zero below 2 eps / delta because the mollification replaces the
// kernel there by the flat power law.
double deviation_mass(const KernelSpec& k, const MollifierSpec& mol, double z,
                      double delta, double tol) {
    if (k.ykind == KernelSpec::YKind::Flat && k.flat_value == 1.0 && !k.x_dependent()) return 0.0;
    double sigma = k.sigma;
    double eps = mol.epsilon;
    double ydev = 2.0 * eps / delta;
    auto dev = [&](double yh) {
        double Y = delta * yh;
        return mollify_kernel(k, mol, z, Y) * std::pow(Y, 1.0 + sigma) / (2.0 - sigma) -
               1.0;
    };
    bool periodic = k.ykind != KernelSpec::YKind::Flat && k.amp != 0.0;
    double settle = std::max(ydev, 6.0 * eps / delta);
    if (k.ykind == KernelSpec::YKind::SignCos)
        settle = std::max(settle, (k.split + 6.0 * eps) / delta);
    double acc = 0.0;
    if (periodic) {
        double P = (k.ykind == KernelSpec::YKind::SignCos ? 2.0 / k.wave : 2.0 * kPi / k.wave) / delta;
        double yper = std::max(settle * 1.5, ydev + P);
        int panels = std::max(4, static_cast<int>(std::ceil((yper - ydev) / (P / 8.0))));
        for (int q = 0; q < panels; ++q) {
            double c = ydev + (yper - ydev) * q / panels;
            double d = ydev + (yper - ydev) * (q + 1) / panels;
            acc += quad::gl(c, d, 16, [&](double yh) {
                return dev(yh) * std::pow(yh, -1.0 - sigma);
            });
        }
        acc += quad::far_periodic_smooth_integral(dev, P, {}, sigma, yper, tol);
    } else {
        // The mollified modulation settles to a constant; integrate the
        // transition band, the constant exactly, and the decaying remainder
        // on doubling panels.
        double cinf = dev((1 << 20) * eps / delta);
        for (int q = 0; q < 8; ++q) {
            double c = ydev + (settle - ydev) * q / 8.0;
            double d = ydev + (settle - ydev) * (q + 1) / 8.0;
            if (d - c < 1e-15) continue;
            acc += quad::gl(c, d, 16, [&](double yh) {
                return dev(yh) * std::pow(yh, -1.0 - sigma);
            });
        }
        acc += cinf * quad::power_integral(-1.0 - sigma, settle, kInf);
        double a = settle;
        for (int j = 0; j < 48; ++j) {
            double b = 2.0 * a;
            double piece = quad::gl(a, b, 16, [&](double yh) {
                return (dev(yh) - cinf) * std::pow(yh, -1.0 - sigma);
            });
            acc += piece;
            if (std::abs(piece) < 1e-14) break;
            a = b;
        }
    }
    return 2.0 * (2.0 - sigma) * acc;
}

}  // namespace

SolveReport solve_linear_dirichlet(const DirichletProblem& p) {
    if (p.extremal)
        throw ConfigError("the linear solve does not take an extremal sign");
    if (p.family.members.size() != 1)
        throw ConfigError("the linear solve needs exactly one family member");
    p.family.validate();
    const KernelSpec& k = p.family.members[0].kernel;
    Grid g = make_grid(p, k.sigma);
    LinearSystem sys = assemble_member(k, p.family.members[0].cost, p, g);
    Eigen::VectorXd u = solve_dominant(sys.M, -sys.r, p.tolerance);
    double res = (sys.M * u + sys.r).lpNorm<Eigen::Infinity>();
    return SolveReport{
        .solution = wrap_solution(u, p, g),
        .residual = res,
        .iterations = 1,
        .policy_trace = {},
        .contraction_factors = {},
        .residual_trace = {res},
        .howard_defect = 0.0,
    };
}

SolveReport solve_bellman_dirichlet(const DirichletProblem& p) {
    if (p.extremal) return solve_bellman_extremal(p);
    if (p.family.members.empty()) throw ConfigError("the family has no members");
    return solve_bellman_finite(p);
}

SolveReport solve_contraction(const DirichletProblem& p, const MollifierSpec& m,
                              double delta, double center) {
    if (p.extremal || p.family.members.size() != 1)
        throw ConfigError("the contraction step runs on a single kernel");
    const KernelSpec& k = p.family.members[0].kernel;
    Grid g = make_grid(p, k.sigma);
    if (!(delta > 0.0)) throw ConfigError("ball radius must be positive");
    if (!(m.epsilon > 0.0)) throw ConfigError("mollification scale must be positive");
    if (2.0 * m.epsilon / delta < 2.0)
        throw NoContraction("ball radius exceeds the mollification scale");

    // The rescaled problem only supports exterior data that is constant
    // (possibly zero) outside the unit window.
    double v = p.exterior.eval(1.0);
    for (double t : {1.0 + 1e-7, 1.37, 2.9, 8.1, 123.4}) {
        if (std::abs(p.exterior.eval(t) - v) > 1e-11 * (1.0 + std::abs(v)) ||
            std::abs(p.exterior.eval(-t) - v) > 1e-11 * (1.0 + std::abs(v)))
            throw ConfigError("the contraction step needs constant exterior data");
    }

    double sigma = k.sigma;
    KernelSpec flat = KernelSpec::flat(sigma);
    DirichletProblem pf = p;
    pf.family.members = {FamilyMember{flat, {}, 0.0}};
    pf.family.bounds = EllipticityParams{1.0, 1.0};
    LinearSystem sys = assemble_member(flat, {}, pf, g);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.M);
    double dmass = deviation_mass(k, m, center, delta, p.quad.tol);

    int N = g.N;
    const std::function<double(double)>& cost = p.family.members[0].cost;
    Eigen::VectorXd ce = Eigen::VectorXd::Zero(N);
    if (cost) {
        for (int row = 0; row < N; ++row) {
            double xi = -1.0 + g.h * (row + 1);
            ce(row) = mollify_coeff(cost, m, center + delta * xi);
        }
    }
    double dsig = std::pow(delta, sigma);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(N);
    std::vector<double> factors;
    std::vector<double> rtrace;
    double dprev = -1.0;
    int iters = 0;
    bool done = false;
    for (int it = 1; it <= p.max_iterations; ++it) {
        Eigen::VectorXd rhs(N);
        for (int row = 0; row < N; ++row)
            rhs(row) = -sys.r(row) - (v - w(row)) * dmass - dsig * ce(row);
        Eigen::VectorXd wn = lu.solve(rhs);
        double d = (wn - w).lpNorm<Eigen::Infinity>();
        if (it >= 2 && dprev > 0.0) {
            double gamma = d / dprev;
            factors.push_back(gamma);
            if (gamma >= 1.0 && dprev > 10.0 * p.tolerance)
                throw NoContraction("the update map expanded between sweeps");
        }
        w = wn;
        iters = it;
        rtrace.push_back(std::abs(dmass) * d);
        if (d <= p.tolerance) {
            done = true;
            break;
        }
        dprev = d;
    }
    if (!done) throw MaxIterations("the contraction sweeps did not close");

    Eigen::VectorXd self = sys.M * w + sys.r + dsig * ce;
    for (int row = 0; row < N; ++row) self(row) += (v - w(row)) * dmass;
    return SolveReport{
        .solution = wrap_solution(w, p, g),
        .residual = self.lpNorm<Eigen::Infinity>(),
        .iterations = iters,
        .policy_trace = {},
        .contraction_factors = std::move(factors),
        .residual_trace = std::move(rtrace),
        .howard_defect = 0.0,
    };
}

SolveReport ball_update_sweep(const GridFunction& u0, const DirichletProblem& p,
                              double delta, int passes) {
    if (p.extremal || p.family.members.size() != 1)
        throw ConfigError("ball sweeps run on the single-kernel linear problem");
    p.family.validate();
    const KernelSpec& k = p.family.members[0].kernel;
    Grid g = make_grid(p, k.sigma);
    int n = g.n, N = g.N;
    double h = g.h;
    if (u0.size() != 2 * n + 1 || std::abs(u0.spacing() - h) > 1e-12 ||
        std::abs(u0.halfwidth() - 1.0) > 1e-12)
        throw ConfigError("seed grid does not match the problem grid");
    if (!(delta > 0.0) || passes < 1)
        throw ConfigError("ball radius and pass count must be positive");

    LinearSystem sys = assemble_member(k, p.family.members[0].cost, p, g);
    int reach = std::max(0, static_cast<int>(std::ceil(delta / h - 1e-9)) - 1);
    int cmin = static_cast<int>(std::ceil(delta / h - 1e-9));
    int cmax = 2 * n - cmin;
    if (cmin > cmax) throw ConfigError("ball radius leaves no admissible centers");

    Eigen::VectorXd u(N);
    for (int row = 0; row < N; ++row) u(row) = u0.value(row + 1);

    std::vector<double> rtrace;
    int done = 0;
    for (int pass = 1; pass <= passes; ++pass) {
        for (int c = cmin; c <= cmax; ++c) {
            int lo = std::max(1, c - reach), hi = std::min(2 * n - 1, c + reach);
            int sN = hi - lo + 1;
            Eigen::MatrixXd A = sys.M.block(lo - 1, lo - 1, sN, sN);
            Eigen::VectorXd rhs = -sys.r.segment(lo - 1, sN) -
                                  sys.M.middleRows(lo - 1, sN) * u +
                                  A * u.segment(lo - 1, sN);
            u.segment(lo - 1, sN) = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(rhs);
        }
        double res = (sys.M * u + sys.r).lpNorm<Eigen::Infinity>();
        rtrace.push_back(res);
        done = pass;
        if (res <= p.tolerance) break;
    }
    double res = rtrace.back();
    return SolveReport{
        .solution = wrap_solution(u, p, g),
        .residual = res,
        .iterations = done,
        .policy_trace = {},
        .contraction_factors = {},
        .residual_trace = std::move(rtrace),
        .howard_defect = 0.0,
    };
}

BarrierCheck barrier_check(const GridFunction& u, double p_exp, double region_a,
                           double region_b) {
    if (!(p_exp > 0.0) || !(p_exp <= 4.0))
        throw ConfigError("decay exponent must lie in (0, 4]");
    if (!(region_a < region_b) || region_a < -1.0 - 1e-12 || region_b > 1.0 + 1e-12)
        throw ConfigError("region must be an interval inside [-1, 1]");
    if (u.halfwidth() < 1.0 - 1e-12)
        throw ConfigError("grid must cover the unit ball");
    double C = 0.0, Cc = 0.0;
    int counted = 0, ccount = 0;
    for (int i = 0; i < u.size(); ++i) {
        double x = u.node(i);
        if (x < region_a - 1e-12 || x > region_b + 1e-12) continue;
        double dist = 1.0 - std::abs(x);
        if (dist <= 1e-12) continue;
        double q = std::abs(u.value(i)) / std::pow(dist, p_exp);
        C = std::max(C, q);
        ++counted;
        if (i % 2 == 0) {
            Cc = std::max(Cc, q);
            ++ccount;
        }
    }
    if (counted < 4 || ccount < 2) throw ConfigError("region holds too few nodes");
    BarrierCheck out{C, Cc, false};
    out.pass = std::abs(C - Cc) <= 0.1 * C;
    return out;
}

}  // namespace nlab
