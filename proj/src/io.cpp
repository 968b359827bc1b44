#include "nlab/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace nlab {

namespace {

using nlohmann::json;

// Wraps nlohmann's exceptions so callers only ever see the library's own
// error hierarchy.
template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

json bound_to_json(double v) {
    if (v == std::numeric_limits<double>::infinity()) return "inf";
    if (v == -std::numeric_limits<double>::infinity()) return "-inf";
    return v;
}

double bound_from_json(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw ConfigError("tail bound must be a number, \"inf\", or \"-inf\"");
    }
    return j.get<double>();
}

const char* atom_kind_name(TailAtom::Kind k) {
    switch (k) {
        case TailAtom::Kind::Const: return "const";
        case TailAtom::Kind::Poly: return "poly";
        case TailAtom::Kind::Trig: return "trig";
        case TailAtom::Kind::SignSin: return "sign_sin";
        case TailAtom::Kind::Power: return "power";
    }
    throw ConfigError("unknown tail atom kind");
}

TailAtom::Kind atom_kind_from_name(const std::string& s) {
    if (s == "const") return TailAtom::Kind::Const;
    if (s == "poly") return TailAtom::Kind::Poly;
    if (s == "trig") return TailAtom::Kind::Trig;
    if (s == "sign_sin") return TailAtom::Kind::SignSin;
    if (s == "power") return TailAtom::Kind::Power;
    throw ConfigError("unknown tail atom kind: " + s);
}

json atom_to_json(const TailAtom& a) {
    return json{{"kind", atom_kind_name(a.kind)},
                {"coef", a.coef},
                {"freq", a.freq},
                {"phase", a.phase}};
}

TailAtom atom_from_json(const json& j) {
    TailAtom a;
    a.kind = atom_kind_from_name(j.at("kind").get<std::string>());
    auto c = j.at("coef").get<std::vector<double>>();
    if (c.size() != 4) throw ConfigError("tail atom needs four coefficients");
    std::copy(c.begin(), c.end(), a.coef.begin());
    a.freq = j.at("freq").get<double>();
    a.phase = j.at("phase").get<double>();
    return a;
}

json tail_to_json_obj(const TailSpec& t) {
    json pieces = json::array();
    for (const TailPiece& p : t.pieces) {
        json atoms = json::array();
        for (const TailAtom& a : p.formula.atoms) atoms.push_back(atom_to_json(a));
        pieces.push_back(json{{"lo", bound_to_json(p.lo)},
                              {"hi", bound_to_json(p.hi)},
                              {"atoms", atoms}});
    }
    return json{{"pieces", pieces}};
}

TailSpec tail_from_json_obj(const json& j) {
    TailSpec t;
    for (const json& pj : j.at("pieces")) {
        TailPiece p;
        p.lo = bound_from_json(pj.at("lo"));
        p.hi = bound_from_json(pj.at("hi"));
        for (const json& aj : pj.at("atoms"))
            p.formula = p.formula.plus(TailFormula::of(atom_from_json(aj)));
        t.pieces.push_back(std::move(p));
    }
    return t;
}

const char* ykind_name(KernelSpec::YKind k) {
    switch (k) {
        case KernelSpec::YKind::Flat: return "flat";
        case KernelSpec::YKind::SignCos: return "sign_cos";
        case KernelSpec::YKind::Cos: return "cos";
    }
    throw ConfigError("unknown kernel modulation kind");
}

json kernel_to_json_obj(const KernelSpec& k) {
    json j{{"sigma", k.sigma},
           {"y", ykind_name(k.ykind)},
           {"flat_value", k.flat_value},
           {"inner_value", k.inner_value},
           {"split", k.split},
           {"base", k.base},
           {"amp", k.amp},
           {"wave", k.wave}};
    if (k.xkind == KernelSpec::XKind::BoundedPower) j["xalpha"] = k.xalpha;
    return j;
}

KernelSpec kernel_from_json_obj(const json& j) {
    KernelSpec k;
    k.sigma = j.at("sigma").get<double>();
    if (!(k.sigma > 0.0) || !(k.sigma < 2.0))
        throw ConfigError("kernel order must lie in (0,2)");
    const std::string y = j.at("y").get<std::string>();
    if (y == "flat")
        k.ykind = KernelSpec::YKind::Flat;
    else if (y == "sign_cos")
        k.ykind = KernelSpec::YKind::SignCos;
    else if (y == "cos")
        k.ykind = KernelSpec::YKind::Cos;
    else
        throw ConfigError("unknown kernel modulation kind: " + y);
    k.flat_value = j.value("flat_value", 1.0);
    k.inner_value = j.value("inner_value", 1.0);
    k.split = j.value("split", 1.0);
    k.base = j.value("base", 0.0);
    k.amp = j.value("amp", 0.0);
    k.wave = j.value("wave", 0.0);
    if (j.contains("xalpha")) {
        k.xkind = KernelSpec::XKind::BoundedPower;
        k.xalpha = j.at("xalpha").get<double>();
    }
    return k;
}

json grid_to_json_obj(const GridFunction& u) {
    return json{{"halfwidth", u.halfwidth()},
                {"spacing", u.spacing()},
                {"values", u.values()},
                {"tail", tail_to_json_obj(u.tail())}};
}

GridFunction grid_from_json_obj(const json& j) {
    return GridFunction(j.at("halfwidth").get<double>(),
                        j.at("spacing").get<double>(),
                        j.at("values").get<std::vector<double>>(),
                        tail_from_json_obj(j.at("tail")));
}

// Shortest-round-trip text for CSV cells; JSON output gets the same property
// from the library's serializer.
std::string csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lg", &back);
    if (back == v) {
        // try shorter forms for readability
        for (int digits = 1; digits <= 16; ++digits) {
            char probe[64];
            std::snprintf(probe, sizeof probe, "%.*g", digits, v);
            std::sscanf(probe, "%lg", &back);
            if (back == v) return probe;
        }
    }
    return buf;
}

json growth_to_json(const GrowthReport& g) {
    json entries = json::array();
    for (const GrowthEntry& e : g.entries)
        entries.push_back(json{{"beta", e.beta},
                               {"radius", e.radius},
                               {"measured", e.measured},
                               {"bound", e.bound},
                               {"ratio", e.ratio},
                               {"pass", e.pass}});
    return json{{"entries", entries}, {"all_pass", g.all_pass}};
}

}  // namespace

std::string kernel_to_json(const KernelSpec& k) {
    return kernel_to_json_obj(k).dump(2) + "\n";
}

KernelSpec kernel_from_json(const std::string& text) {
    return guarded("kernel json", [&] {
        return kernel_from_json_obj(json::parse(text));
    });
}

std::string tail_to_json(const TailSpec& t) {
    return tail_to_json_obj(t).dump(2) + "\n";
}

TailSpec tail_from_json(const std::string& text) {
    return guarded("tail json", [&] {
        return tail_from_json_obj(json::parse(text));
    });
}

std::string grid_to_json(const GridFunction& u) {
    return grid_to_json_obj(u).dump(2) + "\n";
}

GridFunction grid_from_json(const std::string& text) {
    return guarded("grid json", [&] {
        return grid_from_json_obj(json::parse(text));
    });
}

DirichletProblem problem_from_json(const std::string& text) {
    return guarded("problem json", [&] {
        const json j = json::parse(text);
        DirichletProblem p;
        for (const json& kj : j.at("kernels"))
            p.family.members.push_back({kernel_from_json_obj(kj), {}, 0.0});
        if (p.family.members.empty())
            throw ConfigError("problem needs at least one kernel");
        if (j.contains("costs")) {
            const json& costs = j.at("costs");
            if (costs.size() != p.family.members.size())
                throw ConfigError("one cost row per kernel");
            for (size_t i = 0; i < p.family.members.size(); ++i) {
                auto c = costs[i].get<std::vector<double>>();
                if (c.size() > 4) throw ConfigError("costs are cubic at most");
                c.resize(4, 0.0);
                p.family.members[i].cost = [c](double x) {
                    return c[0] + x * (c[1] + x * (c[2] + x * c[3]));
                };
            }
        }
        p.family.bounds = EllipticityParams(j.at("lambda").get<double>(),
                                            j.at("Lambda").get<double>());
        if (j.contains("extremal")) {
            const std::string e = j.at("extremal").get<std::string>();
            if (e == "plus")
                p.extremal = ExtremalSign::Plus;
            else if (e == "minus")
                p.extremal = ExtremalSign::Minus;
            else
                throw ConfigError("extremal must be \"plus\" or \"minus\"");
        }
        p.exterior = tail_from_json_obj(j.at("exterior"));
        p.resolution = j.value("resolution", 64);
        p.tolerance = j.value("tolerance", 1e-10);
        p.max_iterations = j.value("max_iterations", 60);
        return p;
    });
}

std::string solve_report_to_json(const SolveReport& rep) {
    json j{{"residual", rep.residual},
           {"iterations", rep.iterations},
           {"policy_trace", rep.policy_trace},
           {"contraction_factors", rep.contraction_factors},
           {"residual_trace", rep.residual_trace},
           {"howard_defect", rep.howard_defect},
           {"solution", grid_to_json_obj(rep.solution)}};
    return j.dump(2) + "\n";
}

std::string solution_to_csv(const GridFunction& u) {
    std::string out = "x,u\n";
    for (int i = 0; i < u.size(); ++i) {
        out += csv_number(u.node(i));
        out += ',';
        out += csv_number(u.value(i));
        out += '\n';
    }
    return out;
}

std::string blowup_report_to_json(const BlowupReport& rep) {
    json rows = json::array();
    for (const BlowupRow& r : rep.rows) {
        rows.push_back(json{{"m", r.m},
                            {"sup_norm", r.sup_norm},
                            {"calpha_seminorm", r.calpha},
                            {"csigma_alpha_seminorm", r.csigma_alpha},
                            {"id_at_zero", r.id_at_zero},
                            {"id_at_half_over_m", r.id_at_half},
                            {"id_deviation", r.id_deviation},
                            {"claim_ratio", r.claim_ratio},
                            {"barrier_C", r.barrier_C},
                            {"barrier_pass", r.barrier_pass},
                            {"residual", r.residual},
                            {"u_at_zero", r.u_at_zero},
                            {"headroom", r.headroom},
                            {"weights_ok", r.weights_ok}});
    }
    const CounterexampleConfig& c = rep.cfg;
    json j{{"kind",
            c.kind == CounterexampleConfig::Kind::Linear ? "linear" : "nonlinear"},
           {"sigma", c.sigma},
           {"alpha", c.alpha},
           {"lambda", c.bounds.lambda},
           {"Lambda", c.bounds.Lambda},
           {"resolution", c.resolution},
           {"rows", rows}};
    return j.dump(2) + "\n";
}

std::string blowup_report_to_csv(const BlowupReport& rep) {
    std::string out =
        "m,sup_norm,calpha_seminorm,csigma_alpha_seminorm,id_at_zero,"
        "id_at_half_over_m\n";
    for (const BlowupRow& r : rep.rows) {
        out += std::to_string(r.m);
        for (double v : {r.sup_norm, r.calpha, r.csigma_alpha, r.id_at_zero,
                         r.id_at_half}) {
            out += ',';
            out += csv_number(v);
        }
        out += '\n';
    }
    return out;
}

std::string comparability_to_json(const ComparabilityReport& rep) {
    json points = json::array();
    for (const ComparabilityPoint& p : rep.points)
        points.push_back(json{{"x", p.x},
                              {"positive", p.positive},
                              {"negative", p.negative},
                              {"hypothesis_ok", p.hypothesis_ok},
                              {"skipped", p.skipped},
                              {"comparable", p.comparable}});
    json j{{"points", points}, {"all_pass", rep.all_pass}, {"note", rep.note}};
    return j.dump(2) + "\n";
}

std::string hypotheses_to_json(const HypothesisReport& rep) {
    json j{{"growth", growth_to_json(rep.growth)},
           {"worst_minus", rep.worst_minus},
           {"worst_plus", rep.worst_plus},
           {"worst_average", rep.worst_average},
           {"pass_growth", rep.pass_growth},
           {"pass_translation", rep.pass_translation},
           {"pass_average", rep.pass_average},
           {"all_pass", rep.all_pass},
           {"note", rep.note}};
    return j.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) throw ConfigError("failed reading " + path);
    return buf.str();
}

void write_text_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp);
        out << content;
        out.flush();
        if (!out.good()) throw ConfigError("failed writing " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw ConfigError("cannot move " + tmp + " into place");
    }
}

}  // namespace nlab
