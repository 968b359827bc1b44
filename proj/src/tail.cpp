#include "nlab/tail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

double square_wave(double t) {
    double s = std::fmod(t, 2.0);
    if (s < 0.0) s += 2.0;
    if (s == 0.0 || s == 1.0) return 0.0;
    return s < 1.0 ? 1.0 : -1.0;
}

// --- TailAtom ---------------------------------------------------------------

TailAtom TailAtom::constant(double c) {
    TailAtom a;
    a.kind = Kind::Const;
    a.coef[0] = c;
    return a;
}

TailAtom TailAtom::poly(std::array<double, 4> coeffs) {
    TailAtom a;
    a.kind = Kind::Poly;
    a.coef = coeffs;
    return a;
}

TailAtom TailAtom::trig(double ca, double cb, double omega) {
    TailAtom a;
    a.kind = Kind::Trig;
    a.coef[0] = ca;
    a.coef[1] = cb;
    a.freq = omega;
    return a;
}

TailAtom TailAtom::sign_sin(double amplitude, double m, double phase) {
    TailAtom a;
    a.kind = Kind::SignSin;
    a.coef[0] = amplitude;
    a.freq = m;
    a.phase = phase;
    return a;
}

TailAtom TailAtom::power(double c, double p) {
    TailAtom a;
    a.kind = Kind::Power;
    a.coef[0] = c;
    a.freq = p;
    return a;
}

double TailAtom::eval(double x) const {
    switch (kind) {
        case Kind::Const:
            return coef[0];
        case Kind::Poly:
            return coef[0] + x * (coef[1] + x * (coef[2] + x * coef[3]));
        case Kind::Trig:
            return coef[0] * std::cos(freq * x) + coef[1] * std::sin(freq * x);
        case Kind::SignSin:
            // freq * x + phase/pi in half-period units; exact +-1 off lattice.
            return coef[0] * square_wave(freq * x + phase / M_PI);
        case Kind::Power:
            return coef[0] * std::pow(std::abs(x), freq);
    }
    return 0.0;
}

TailAtom TailAtom::shifted(double h) const {
    TailAtom a = *this;
    switch (kind) {
        case Kind::Const:
            break;
        case Kind::Poly: {
            // p(x+h) re-expanded around x.
            const auto& c = coef;
            a.coef[0] = c[0] + h * (c[1] + h * (c[2] + h * c[3]));
            a.coef[1] = c[1] + 2.0 * h * c[2] + 3.0 * h * h * c[3];
            a.coef[2] = c[2] + 3.0 * h * c[3];
            a.coef[3] = c[3];
            break;
        }
        case Kind::Trig: {
            double ch = std::cos(freq * h), sh = std::sin(freq * h);
            a.coef[0] = coef[0] * ch + coef[1] * sh;
            a.coef[1] = coef[1] * ch - coef[0] * sh;
            break;
        }
        case Kind::SignSin:
            a.phase = phase + freq * M_PI * h;
            break;
        case Kind::Power:
            if (h != 0.0)
                throw Error("power-growth tail atom cannot be shifted exactly");
            break;
    }
    return a;
}

TailAtom TailAtom::scaled(double c) const {
    // Every kind stores its amplitude(s) in coef; unused slots are zero.
    TailAtom a = *this;
    for (double& v : a.coef) v *= c;
    return a;
}

TailAtom TailAtom::reflected() const {
    TailAtom a = *this;
    switch (kind) {
        case Kind::Const:
        case Kind::Power:
            return a;
        case Kind::Poly:
            a.coef[1] = -a.coef[1];
            a.coef[3] = -a.coef[3];
            return a;
        case Kind::Trig:
            a.coef[1] = -a.coef[1];
            return a;
        case Kind::SignSin:
            // sign(sin(f pi (-x) + phase)) = -sign(sin(f pi x - phase))
            a.coef[0] = -a.coef[0];
            a.phase = -a.phase;
            return a;
    }
    return a;
}

bool TailAtom::is_zero() const {
    switch (kind) {
        case Kind::Poly:
            return coef[0] == 0.0 && coef[1] == 0.0 && coef[2] == 0.0 && coef[3] == 0.0;
        case Kind::Trig:
            return coef[0] == 0.0 && coef[1] == 0.0;
        default:
            return coef[0] == 0.0;
    }
}

double TailAtom::growth() const {
    switch (kind) {
        case Kind::Const:
        case Kind::Trig:
        case Kind::SignSin:
            return 0.0;
        case Kind::Poly: {
            for (int d = 3; d >= 1; --d)
                if (coef[d] != 0.0) return static_cast<double>(d);
            return 0.0;
        }
        case Kind::Power:
            return coef[0] == 0.0 ? 0.0 : freq;
    }
    return 0.0;
}

std::optional<double> TailAtom::sup_abs_from(double lo_abs) const {
    switch (kind) {
        case Kind::Const:
            return std::abs(coef[0]);
        case Kind::Trig:
            return std::hypot(coef[0], coef[1]);
        case Kind::SignSin:
            return std::abs(coef[0]);
        case Kind::Poly:
            if (growth() > 0.0) return std::nullopt;
            return std::abs(coef[0]);
        case Kind::Power:
            if (coef[0] == 0.0) return 0.0;
            if (freq > 0.0) return std::nullopt;
            return std::abs(coef[0]) * std::pow(lo_abs, freq);
    }
    return std::nullopt;
}

bool TailAtom::piecewise_const() const {
    return kind == Kind::Const || kind == Kind::SignSin ||
           (kind == Kind::Poly && growth() == 0.0);
}

// --- TailFormula ------------------------------------------------------------

TailFormula TailFormula::of(TailAtom a) {
    TailFormula f;
    f.atoms.push_back(a);
    f.normalize();
    return f;
}

double TailFormula::eval(double x) const {
    double v = 0.0;
    for (const auto& a : atoms) v += a.eval(x);
    return v;
}

TailFormula TailFormula::shifted(double h) const {
    TailFormula f;
    f.atoms.reserve(atoms.size());
    for (const auto& a : atoms) f.atoms.push_back(a.shifted(h));
    f.normalize();
    return f;
}

TailFormula TailFormula::scaled(double c) const {
    TailFormula f;
    f.atoms.reserve(atoms.size());
    for (const auto& a : atoms) f.atoms.push_back(a.scaled(c));
    f.normalize();
    return f;
}

TailFormula TailFormula::reflected() const {
    TailFormula f;
    f.atoms.reserve(atoms.size());
    for (const auto& a : atoms) f.atoms.push_back(a.reflected());
    f.normalize();
    return f;
}

TailFormula TailFormula::plus(const TailFormula& other) const {
    TailFormula f = *this;
    f.atoms.insert(f.atoms.end(), other.atoms.begin(), other.atoms.end());
    f.normalize();
    return f;
}

void TailFormula::normalize() {
    std::vector<TailAtom> merged;
    for (const auto& a : atoms) {
        bool absorbed = false;
        for (auto& m : merged) {
            if (m.kind != a.kind) continue;
            bool same = false;
            switch (a.kind) {
                case TailAtom::Kind::Const:
                case TailAtom::Kind::Poly:
                    same = true;
                    break;
                case TailAtom::Kind::Trig:
                    same = (m.freq == a.freq);
                    break;
                case TailAtom::Kind::SignSin:
                    same = (m.freq == a.freq && m.phase == a.phase);
                    break;
                case TailAtom::Kind::Power:
                    same = (m.freq == a.freq);
                    break;
            }
            if (!same) continue;
            if (a.kind == TailAtom::Kind::Const && m.kind == TailAtom::Kind::Const) {
                m.coef[0] += a.coef[0];
            } else if (a.kind == TailAtom::Kind::Poly) {
                for (int i = 0; i < 4; ++i) m.coef[i] += a.coef[i];
            } else if (a.kind == TailAtom::Kind::Trig) {
                m.coef[0] += a.coef[0];
                m.coef[1] += a.coef[1];
            } else {
                m.coef[0] += a.coef[0];
            }
            absorbed = true;
            break;
        }
        if (!absorbed) merged.push_back(a);
    }
    // Fold constant atoms and degree-0 polynomials together.
    double const_sum = 0.0;
    std::vector<TailAtom> out;
    for (auto& m : merged) {
        if (m.kind == TailAtom::Kind::Const) {
            const_sum += m.coef[0];
        } else if (m.kind == TailAtom::Kind::Poly && m.growth() == 0.0) {
            const_sum += m.coef[0];
        } else if (!m.is_zero()) {
            out.push_back(m);
        }
    }
    if (const_sum != 0.0) out.push_back(TailAtom::constant(const_sum));
    atoms = std::move(out);
}

double TailFormula::growth() const {
    double g = 0.0;
    for (const auto& a : atoms) g = std::max(g, a.growth());
    return g;
}

std::optional<double> TailFormula::sup_abs_from(double lo_abs) const {
    double s = 0.0;
    for (const auto& a : atoms) {
        auto b = a.sup_abs_from(lo_abs);
        if (!b) return std::nullopt;
        s += *b;
    }
    return s;
}

bool TailFormula::piecewise_const() const {
    return std::all_of(atoms.begin(), atoms.end(),
                       [](const TailAtom& a) { return a.piecewise_const(); });
}

// --- TailSpec ---------------------------------------------------------------

TailSpec TailSpec::zero(double halfwidth) {
    TailSpec t;
    t.pieces.push_back({-kInf, -halfwidth, TailFormula::zero()});
    t.pieces.push_back({halfwidth, kInf, TailFormula::zero()});
    return t;
}

TailSpec TailSpec::constant(double halfwidth, double value) {
    return uniform(halfwidth, TailFormula::of(TailAtom::constant(value)));
}

TailSpec TailSpec::uniform(double halfwidth, TailFormula f) {
    TailSpec t;
    t.pieces.push_back({-kInf, -halfwidth, f});
    t.pieces.push_back({halfwidth, kInf, f});
    return t;
}

TailSpec TailSpec::sign_sin_with_collar(double halfwidth, double collar, double m) {
    TailSpec t;
    TailFormula wave = TailFormula::of(TailAtom::sign_sin(1.0, m));
    t.pieces.push_back({-kInf, -collar, wave});
    t.pieces.push_back({-collar, -halfwidth, TailFormula::zero()});
    t.pieces.push_back({halfwidth, collar, TailFormula::zero()});
    t.pieces.push_back({collar, kInf, wave});
    return t;
}

void TailSpec::validate(double halfwidth) const {
    if (pieces.empty()) throw ConfigError("tail spec has no pieces");
    double cursor = -kInf;
    bool in_gap = false;
    for (const auto& p : pieces) {
        if (!(p.lo < p.hi)) throw ConfigError("tail piece with empty interval");
        if (p.lo != cursor) {
            // The only allowed gap is the grid window (-X, X).
            if (in_gap || std::abs(cursor - (-halfwidth)) > 1e-12 ||
                std::abs(p.lo - halfwidth) > 1e-12)
                throw ConfigError("tail pieces do not tile the complement of the grid window");
            in_gap = true;
        }
        cursor = p.hi;
    }
    if (cursor != kInf) throw ConfigError("tail does not reach +infinity");
    if (!in_gap && halfwidth > 0.0)
        throw ConfigError("tail pieces overlap the grid window");
}

const TailPiece& TailSpec::piece_at(double x) const {
    for (const auto& p : pieces)
        if (x >= p.lo && x < p.hi) return p;
    // x == +inf never queried; treat right-closed last piece.
    if (!pieces.empty() && x >= pieces.back().lo) return pieces.back();
    throw OutOfDomain("tail evaluation inside the grid window");
}

double TailSpec::eval(double x) const { return piece_at(x).formula.eval(x); }

double TailSpec::growth() const {
    double g = 0.0;
    for (const auto& p : pieces)
        if (p.lo == -kInf || p.hi == kInf) g = std::max(g, p.formula.growth());
    return g;
}

std::optional<double> TailSpec::sup_abs() const {
    double s = 0.0;
    for (const auto& p : pieces) {
        double lo_abs = std::min(std::abs(p.lo), std::abs(p.hi));
        if (p.lo == -kInf || p.hi == kInf) {
            auto b = p.formula.sup_abs_from(lo_abs);
            if (!b) return std::nullopt;
            s = std::max(s, *b);
        } else {
            // Finite piece: polynomial atoms are bounded here; sample the
            // endpoints and derivative roots would be exact, but a dense
            // sample is enough for a conservative bound.
            double m = 0.0;
            for (int i = 0; i <= 32; ++i) {
                double x = p.lo + (p.hi - p.lo) * i / 32.0;
                m = std::max(m, std::abs(p.formula.eval(x)));
            }
            auto b = p.formula.sup_abs_from(std::max(lo_abs, 1e-300));
            s = std::max(s, b ? std::min(*b, m * 1.5 + 1e-300) : m * 1.5);
        }
    }
    return s;
}

void TailSpec::append_breakpoints(double a, double b, std::vector<double>& out) const {
    for (const auto& p : pieces) {
        if (p.lo > a && p.lo < b) out.push_back(p.lo);
        if (p.hi > a && p.hi < b) out.push_back(p.hi);
        double lo = std::max(a, p.lo), hi = std::min(b, p.hi);
        if (!(lo < hi)) continue;
        for (const auto& atom : p.formula.atoms) {
            if (atom.kind != TailAtom::Kind::SignSin) continue;
            // zeros at x = (k - phase/pi) / freq, spacing 1/freq
            double step = 1.0 / atom.freq;
            double off = -atom.phase / (M_PI * atom.freq);
            double k0 = std::ceil((lo - off) / step);
            for (double k = k0; off + k * step < hi; k += 1.0) {
                double x = off + k * step;
                if (x > lo && x < hi) out.push_back(x);
            }
        }
    }
}

TailSpec TailSpec::scaled(double c) const {
    TailSpec t = *this;
    for (auto& p : t.pieces) p.formula = p.formula.scaled(c);
    return t;
}

}  // namespace nlab
