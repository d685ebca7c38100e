#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "frakdiff/errors.hpp"
#include "frakdiff/potential.hpp"

namespace frakdiff::harness {

using json = nlohmann::json;

enum class Kind { SolveLinear, SolveNonlinear, VerifyTrotter, VerifyLchs, VerifyCarleman, VerifySpatial, EstimateCost };

inline const std::vector<std::pair<Kind, std::string>>& kind_names() {
    static const std::vector<std::pair<Kind, std::string>> names{
        {Kind::SolveLinear, "solve-linear"},       {Kind::SolveNonlinear, "solve-nonlinear"},
        {Kind::VerifyTrotter, "verify-trotter"},   {Kind::VerifyLchs, "verify-lchs"},
        {Kind::VerifyCarleman, "verify-carleman"}, {Kind::VerifySpatial, "verify-spatial"},
        {Kind::EstimateCost, "estimate-cost"},
    };
    return names;
}

inline std::string to_string(Kind k) {
    for (const auto& [kind, name] : kind_names())
        if (kind == k) return name;
    return "unknown";
}

/// Knobs a sweep may vary, per experiment kind.
inline std::vector<std::string> sweep_knobs(Kind k) {
    switch (k) {
        case Kind::VerifyTrotter: return {"r", "N", "epsilon"};
        case Kind::VerifyLchs: return {"Xi", "M_quad", "epsilon"};
        case Kind::VerifyCarleman: return {"M_carl"};
        case Kind::VerifySpatial: return {"N"};
        case Kind::EstimateCost: return {"epsilon"};
        default: return {};
    }
}

namespace detail {

/// Object reader that records consumed keys so leftovers can be rejected.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("must be an object");
    }

    [[noreturn]] void fail(const std::string& msg) const { throw SchemaError(path_ + ": " + msg); }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) fail("missing required key '" + key + "'");
        return j_.at(key);
    }

    Reader object(const std::string& key) { return Reader(raw(key), sub(key)); }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw SchemaError(sub(key) + ": must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw SchemaError(sub(key) + ": must be finite");
        return x;
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    std::int64_t integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw SchemaError(sub(key) + ": must be an integer");
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) throw SchemaError(sub(key) + ": must be a boolean");
        return v.get<bool>();
    }

    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw SchemaError(sub(key) + ": must be a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : fallback; }

    std::string choice(const std::string& key, const std::vector<std::string>& allowed, const std::string& fallback) {
        const std::string v = string(key, fallback);
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw SchemaError(sub(key) + ": '" + v + "' is not one of {" + list + "}");
        }
        return v;
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw SchemaError(sub(key) + ": must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw SchemaError(sub(key) + ": must be an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::string sub(const std::string& key) const { return path_ + "/" + key; }
    const std::string& path() const { return path_; }

    /// Throws if any key was never read.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& path, const std::string& msg) {
    if (!ok) throw SchemaError(path + ": " + msg);
}

inline TimeFunction parse_time_function(const json& j, const std::string& path) {
    if (j.is_number()) return ConstantFn{j.get<double>()};
    Reader r(j, path);
    TimeFunction f;
    int forms = 0;
    if (r.has("constant")) {
        f = ConstantFn{r.number("constant")};
        ++forms;
    }
    if (r.has("polynomial")) {
        f = PolynomialFn{r.numbers("polynomial")};
        ++forms;
    }
    if (r.has("sinusoid")) {
        Reader s = r.object("sinusoid");
        f = SinusoidFn{s.number("amplitude"), s.number("omega"), s.number("phase", 0.0), s.number("shift", 0.0)};
        s.finish();
        ++forms;
    }
    require(forms == 1, path, "exactly one of constant, polynomial, sinusoid is required");
    r.finish();
    return f;
}

}  // namespace detail

struct RandomPotentialSpec {
    int modes = 3;
    bool time_dependent = true;
};

struct PotentialSpec {
    std::optional<RandomPotentialSpec> random;
    PotentialField explicit_field;
};

/// Initial data: "random_smooth" (seeded Fourier sum), "sine" (sin 2πk·x),
/// "bump" (Fourier sum plus a C^∞ bump) or "constant".
struct InitialSpec {
    std::string type = "random_smooth";
    std::vector<std::int64_t> k;
    double width = 0.45;
    double value = 1.0;
    std::optional<double> norm;  ///< rescale to this 2-norm
};

struct AlphaSpec {
    double lo = 1.0, hi = 1.0;  ///< fixed when lo == hi, else U[lo, hi] per system
};

struct ProblemConfig {
    int dim = 1;
    std::size_t N = 16;
    AlphaSpec alpha;
    PotentialSpec potential;
    bool shift = false;
    double a = 0.0;
    InitialSpec u0;
    double T = 1.0;
};

struct SweepConfig {
    std::string parameter;
    std::vector<double> values;
};

struct OutputConfig {
    std::string dir = ".";
    std::string stem;
};

/// Method block; each kind reads the subset it needs and the rest are rejected.
struct MethodConfig {
    std::string solver;
    std::string strategy = "spectral";
    std::size_t r = 32;
    std::optional<double> epsilon;
    std::optional<double> Xi;
    std::optional<std::size_t> M_quad;
    double M_per_Xi2 = 50.0;
    int M_carl = 2;
    int systems = 1;
    bool operator_level = true;
    std::optional<double> scalar_c0;
    std::vector<double> times;
    double equivalence_tol = 1e-8;
    std::size_t N_ref = 1024;
    bool compare_reference = true;
    std::optional<int> bound_p;
    double bound_deriv_norm = 0.0;
    bool empirical_M = false;
    // estimate-cost
    std::vector<std::string> methods;
    json model = json::object();
    bool audit = false;
    double audit_tolerance = 0.05;
};

struct Tolerances {
    double reference = 1e-12;
    double integrator = 1e-10;
};

struct ExperimentConfig {
    Kind kind = Kind::SolveLinear;
    std::uint64_t seed = 0;
    ProblemConfig problem;
    MethodConfig method;
    Tolerances tol;
    std::optional<SweepConfig> sweep;
    OutputConfig output;
    json source;  ///< the validated input, echoed into the summary
};

namespace detail {

inline PotentialSpec parse_potential(Reader r, int dim) {
    PotentialSpec p;
    const std::string type = r.choice("type", {"random", "explicit", "zero"}, "explicit");
    if (type == "random") {
        RandomPotentialSpec s;
        s.modes = static_cast<int>(r.integer("modes", 3));
        require(s.modes >= 0 && s.modes <= 16, r.sub("modes"), "must lie in [0, 16]");
        s.time_dependent = r.boolean("time_dependent", true);
        p.random = s;
    } else if (type == "explicit") {
        if (r.has("offset")) p.explicit_field.offset = parse_time_function(r.raw("offset"), r.sub("offset"));
        if (r.has("modes")) {
            const json& arr = r.raw("modes");
            require(arr.is_array(), r.sub("modes"), "must be an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                Reader m(arr[i], r.sub("modes") + "/" + std::to_string(i));
                PotentialMode mode;
                const json& k = m.raw("k");
                require(k.is_array() && k.size() == static_cast<std::size_t>(dim), m.sub("k"),
                        "must be an integer array of length dim");
                for (const auto& c : k) {
                    require(c.is_number_integer(), m.sub("k"), "must contain integers");
                    mode.k.push_back(c.get<std::int64_t>());
                }
                mode.basis = m.choice("basis", {"cos", "sin"}, "cos") == "cos" ? ModeBasis::Cos : ModeBasis::Sin;
                mode.coefficient = parse_time_function(m.raw("coefficient"), m.sub("coefficient"));
                m.finish();
                p.explicit_field.modes.push_back(std::move(mode));
            }
        }
    }
    r.finish();
    return p;
}

inline InitialSpec parse_initial(Reader r, int dim) {
    InitialSpec s;
    s.type = r.choice("type", {"random_smooth", "sine", "bump", "constant"}, "random_smooth");
    if (s.type == "sine") {
        const json& k = r.raw("k");
        require(k.is_array() && k.size() == static_cast<std::size_t>(dim), r.sub("k"), "must be an integer array of length dim");
        for (const auto& c : k) {
            require(c.is_number_integer(), r.sub("k"), "must contain integers");
            s.k.push_back(c.get<std::int64_t>());
        }
    }
    if (s.type == "bump") {
        s.width = r.number("width", 0.45);
        require(s.width > 0.0 && s.width <= 0.5, r.sub("width"), "must lie in (0, 0.5]");
    }
    if (s.type == "constant") s.value = r.number("value", 1.0);
    if (r.has("norm")) {
        s.norm = r.number("norm");
        require(*s.norm > 0.0, r.sub("norm"), "must be positive");
    }
    r.finish();
    return s;
}

inline ProblemConfig parse_problem(Reader r, Kind kind) {
    ProblemConfig p;
    p.dim = static_cast<int>(r.integer("dim", 1));
    require(p.dim >= 1 && p.dim <= 3, r.sub("dim"), "must lie in [1, 3]");
    const auto N = r.integer("N", 16);
    require(N >= 2 && (N & (N - 1)) == 0 && N <= 4096, r.sub("N"), "must be a power of two in [2, 4096]");
    p.N = static_cast<std::size_t>(N);
    if (r.has("alpha")) {
        const json& a = r.raw("alpha");
        if (a.is_number()) {
            p.alpha.lo = p.alpha.hi = a.get<double>();
        } else {
            Reader ar(a, r.sub("alpha"));
            const auto range = ar.numbers("uniform");
            require(range.size() == 2 && range[0] <= range[1], ar.sub("uniform"), "must be [lo, hi] with lo <= hi");
            p.alpha.lo = range[0];
            p.alpha.hi = range[1];
            ar.finish();
        }
        require(p.alpha.lo > 0.0 && p.alpha.hi <= 2.0, r.sub("alpha"), "must lie in (0, 2]");
    }
    if (r.has("potential")) p.potential = parse_potential(r.object("potential"), p.dim);
    p.shift = r.boolean("shift", false);
    if (kind == Kind::SolveNonlinear || kind == Kind::VerifyCarleman) p.a = r.number("a", 0.0);
    if (r.has("u0")) p.u0 = parse_initial(r.object("u0"), p.dim);
    p.T = r.number("T", 1.0);
    require(p.T > 0.0, r.sub("T"), "must be positive");
    r.finish();
    return p;
}

inline void reject_unless(Reader& r, bool allowed, const std::string& key, Kind kind) {
    if (!allowed && r.has(key)) r.fail("key '" + key + "' is not used by kind " + to_string(kind));
}

inline MethodConfig parse_method(Reader r, Kind kind) {
    MethodConfig m;
    const bool linear_solve = kind == Kind::SolveLinear;
    const bool nonlinear = kind == Kind::SolveNonlinear || kind == Kind::VerifyCarleman;
    const bool lchs = kind == Kind::VerifyLchs || linear_solve;
    const bool trotter = kind == Kind::VerifyTrotter || linear_solve;

    reject_unless(r, linear_solve || kind == Kind::SolveNonlinear, "solver", kind);
    if (linear_solve) m.solver = r.choice("solver", {"trotter", "lchs", "reference"}, "trotter");
    if (kind == Kind::SolveNonlinear) m.solver = r.choice("solver", {"carleman", "extended", "reference"}, "carleman");

    reject_unless(r, trotter, "r", kind);
    if (r.has("r")) {
        const auto v = r.integer("r");
        require(v >= 1, r.sub("r"), "must be at least 1");
        m.r = static_cast<std::size_t>(v);
    }
    reject_unless(r, trotter || lchs, "epsilon", kind);
    if (r.has("epsilon")) {
        m.epsilon = r.number("epsilon");
        require(*m.epsilon > 0.0 && *m.epsilon < 1.0, r.sub("epsilon"), "must lie in (0, 1)");
    }
    reject_unless(r, lchs, "strategy", kind);
    reject_unless(r, lchs, "Xi", kind);
    reject_unless(r, lchs, "M_quad", kind);
    if (lchs) {
        m.strategy = r.choice("strategy", {"spectral", "interaction_picture"}, linear_solve ? "interaction_picture" : "spectral");
        if (r.has("Xi")) {
            m.Xi = r.number("Xi");
            require(*m.Xi > 0.0, r.sub("Xi"), "must be positive");
        }
        if (r.has("M_quad")) {
            const auto v = r.integer("M_quad");
            require(v >= 1, r.sub("M_quad"), "must be at least 1");
            m.M_quad = static_cast<std::size_t>(v);
        }
    }
    reject_unless(r, kind == Kind::VerifyLchs, "M_per_Xi2", kind);
    reject_unless(r, kind == Kind::VerifyLchs, "scalar_c0", kind);
    reject_unless(r, kind == Kind::VerifyLchs, "empirical_M", kind);
    if (kind == Kind::VerifyLchs) {
        m.M_per_Xi2 = r.number("M_per_Xi2", 50.0);
        require(m.M_per_Xi2 > 0.0, r.sub("M_per_Xi2"), "must be positive");
        if (r.has("scalar_c0")) {
            m.scalar_c0 = r.number("scalar_c0");
            require(*m.scalar_c0 >= 0.0, r.sub("scalar_c0"), "must be nonnegative");
        }
        m.empirical_M = r.boolean("empirical_M", false);
    }

    reject_unless(r, nonlinear, "M_carl", kind);
    if (nonlinear) {
        m.M_carl = static_cast<int>(r.integer("M_carl", 2));
        require(m.M_carl >= 1 && m.M_carl <= 12, r.sub("M_carl"), "must lie in [1, 12]");
    }
    reject_unless(r, kind == Kind::VerifyCarleman, "times", kind);
    reject_unless(r, kind == Kind::VerifyCarleman, "equivalence_tol", kind);
    if (kind == Kind::VerifyCarleman) {
        if (r.has("times")) m.times = r.numbers("times");
        m.equivalence_tol = r.number("equivalence_tol", 1e-8);
        require(m.equivalence_tol > 0.0, r.sub("equivalence_tol"), "must be positive");
    }

    reject_unless(r, kind == Kind::VerifyTrotter, "systems", kind);
    reject_unless(r, kind == Kind::VerifyTrotter, "operator_level", kind);
    if (kind == Kind::VerifyTrotter) {
        m.systems = static_cast<int>(r.integer("systems", 1));
        require(m.systems >= 1 && m.systems <= 1000, r.sub("systems"), "must lie in [1, 1000]");
        m.operator_level = r.boolean("operator_level", true);
    }

    reject_unless(r, kind == Kind::VerifySpatial, "N_ref", kind);
    reject_unless(r, kind == Kind::VerifySpatial, "bound", kind);
    if (kind == Kind::VerifySpatial) {
        const auto v = r.integer("N_ref", 1024);
        require(v >= 2 && (v & (v - 1)) == 0 && v <= (1 << 20), r.sub("N_ref"), "must be a power of two");
        m.N_ref = static_cast<std::size_t>(v);
        if (r.has("bound")) {
            Reader b = r.object("bound");
            m.bound_p = static_cast<int>(b.integer("p"));
            m.bound_deriv_norm = b.number("deriv_norm");
            require(m.bound_deriv_norm >= 0.0, b.sub("deriv_norm"), "must be nonnegative");
            b.finish();
        }
    }

    reject_unless(r, linear_solve || kind == Kind::SolveNonlinear, "compare_reference", kind);
    m.compare_reference = r.boolean("compare_reference", true);

    reject_unless(r, kind == Kind::EstimateCost, "methods", kind);
    reject_unless(r, kind == Kind::EstimateCost, "model", kind);
    reject_unless(r, kind == Kind::EstimateCost, "audit", kind);
    reject_unless(r, kind == Kind::EstimateCost, "audit_tolerance", kind);
    if (kind == Kind::EstimateCost) {
        if (r.has("methods")) {
            const json& arr = r.raw("methods");
            require(arr.is_array() && !arr.empty(), r.sub("methods"), "must be a nonempty array");
            for (const auto& e : arr) {
                require(e.is_string(), r.sub("methods"), "must contain strings");
                const auto s = e.get<std::string>();
                require(s == "trotter" || s == "time-marching" || s == "dyson" || s == "lchs-ip", r.sub("methods"),
                        "unknown method '" + s + "'");
                m.methods.push_back(s);
            }
        } else {
            m.methods = {"trotter", "time-marching", "dyson", "lchs-ip"};
        }
        if (r.has("model")) {
            m.model = r.raw("model");
            Reader mr(m.model, r.sub("model"));
            for (const char* key : {"d", "alpha", "sigma", "T", "epsilon", "gT", "gTildeT", "Q", "eta"})
                if (mr.has(key)) mr.number(key);
            mr.finish();
        }
        m.audit = r.boolean("audit", false);
        m.audit_tolerance = r.number("audit_tolerance", 0.05);
        require(m.audit_tolerance > 0.0, r.sub("audit_tolerance"), "must be positive");
    }
    r.finish();
    return m;
}

}  // namespace detail

/// Validates `j` strictly and returns the typed configuration. Every violation is a SchemaError.
inline ExperimentConfig parse_config(const json& j) {
    detail::Reader r(j, "");
    ExperimentConfig c;
    c.source = j;
    const std::string kind = r.string("kind");
    bool found = false;
    for (const auto& [k, name] : kind_names())
        if (name == kind) {
            c.kind = k;
            found = true;
        }
    if (!found) throw SchemaError("/kind: unknown experiment kind '" + kind + "'");
    if (r.has("seed")) {
        const auto s = r.integer("seed");
        detail::require(s >= 0, "/seed", "must be nonnegative");
        c.seed = static_cast<std::uint64_t>(s);
    }

    if (c.kind == Kind::EstimateCost) {
        if (r.has("problem")) r.fail("key 'problem' is not used by kind estimate-cost");
    } else {
        c.problem = detail::parse_problem(r.object("problem"), c.kind);
    }
    c.method = detail::parse_method(r.has("method") ? r.object("method") : detail::Reader(json::object(), "/method"),
                                    c.kind);

    if (r.has("tolerances")) {
        auto t = r.object("tolerances");
        c.tol.reference = t.number("reference", c.tol.reference);
        c.tol.integrator = t.number("integrator", c.tol.integrator);
        for (double v : {c.tol.reference, c.tol.integrator})
            detail::require(v > 1e-14 && v < 1e-4, t.path(), "tolerances must lie in (1e-14, 1e-4)");
        t.finish();
    }

    if (r.has("sweep")) {
        auto s = r.object("sweep");
        SweepConfig sw;
        const auto knobs = sweep_knobs(c.kind);
        if (knobs.empty()) s.fail("kind " + kind + " does not support sweeps");
        sw.parameter = s.choice("parameter", knobs, knobs.front());
        sw.values = s.numbers("values");
        if (sw.values.empty()) throw SchemaError("/sweep/values: sweep list is empty");
        for (double v : sw.values) {
            if (!(v > 0.0)) throw SchemaError("/sweep/values: values must be positive");
            const bool integral = sw.parameter == "r" || sw.parameter == "N" || sw.parameter == "M_quad" ||
                                  sw.parameter == "M_carl";
            if (integral && v != std::floor(v)) throw SchemaError("/sweep/values: " + sw.parameter + " takes integers");
            if (sw.parameter == "N" && (v < 2 || (static_cast<std::uint64_t>(v) & (static_cast<std::uint64_t>(v) - 1))))
                throw SchemaError("/sweep/values: N must be a power of two >= 2");
            if (sw.parameter == "epsilon" && !(v < 1.0)) throw SchemaError("/sweep/values: epsilon must lie in (0, 1)");
            if (sw.parameter == "M_carl" && v > 12) throw SchemaError("/sweep/values: M_carl must lie in [1, 12]");
        }
        std::sort(sw.values.begin(), sw.values.end());
        if (std::adjacent_find(sw.values.begin(), sw.values.end()) != sw.values.end())
            throw SchemaError("/sweep/values: duplicate values");
        s.finish();
        c.sweep = std::move(sw);
    }

    if (r.has("output")) {
        auto o = r.object("output");
        c.output.dir = o.string("dir", ".");
        c.output.stem = o.string("stem", "");
        o.finish();
    }
    if (c.output.stem.empty()) {
        c.output.stem = kind;
        std::replace(c.output.stem.begin(), c.output.stem.end(), '-', '_');
    }
    r.finish();
    return c;
}

}  // namespace frakdiff::harness
