#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "frakdiff/errors.hpp"

namespace frakdiff {

/// Oracle names used in query tallies.
namespace oracle {
inline const std::string O1 = "O1";
inline const std::string O2 = "O2";
inline const std::string Ou = "Ou";
inline const std::string QFT = "QFT";
inline const std::string MAT_A = "MAT_A";
inline const std::string HAM_T = "HAM-T";
inline const std::string SEL = "SEL";
}  // namespace oracle

using QueryCounts = std::map<std::string, std::uint64_t>;

/// (α, n, ε) block-encoding with per-oracle query counts. An empty `ancillas`
/// means the count is not tracked.
struct BlockEncodingDesc {
    double factor = 1.0;
    std::optional<int> ancillas = 0;
    double error = 0.0;
    QueryCounts queries;

    static BlockEncodingDesc identity() { return {}; }
    static BlockEncodingDesc of(const std::string& oracle_name, double factor = 1.0, std::optional<int> ancillas = 0,
                                double error = 0.0) {
        return {factor, ancillas, error, {{oracle_name, 1}}};
    }
};

inline int ceil_log2(std::size_t m) {
    int b = 0;
    while ((std::size_t{1} << b) < m) ++b;
    return b;
}

namespace detail {

inline void check_desc(const BlockEncodingDesc& d) {
    if (!(d.factor >= 0.0) || !(d.error >= 0.0) || !std::isfinite(d.factor) || !std::isfinite(d.error))
        throw InputError("block-encoding factor and error must be finite and nonnegative");
    if (d.ancillas && *d.ancillas < 0) throw InputError("ancilla count must be nonnegative");
}

inline void merge_queries(QueryCounts& into, const QueryCounts& from) {
    for (const auto& [k, v] : from) into[k] += v;
}

}  // namespace detail

/// Σ_j y_j A_j from encodings of A_j and a state-preparation pair with error ε₁.
///
/// With a common factor α: (αβ, a + b, αε₁ + αβε₂), β = ‖y‖₁, a = max n_j, b = ⌈log₂ m⌉,
/// ε₂ = max ε_j. Differing factors are first normalised to α = 1 by folding α_j into
/// the coefficients (y_j → y_j α_j, ε_j → ε_j/α_j).
inline BlockEncodingDesc lcu_combine(const std::vector<BlockEncodingDesc>& terms, const std::vector<double>& coeffs,
                                     double prep_error = 0.0) {
    if (terms.empty()) throw InputError("LCU needs at least one term");
    if (coeffs.size() != terms.size()) throw InputError("one coefficient per term is required");
    if (!(prep_error >= 0.0)) throw InputError("state-preparation error must be nonnegative");
    for (const auto& t : terms) detail::check_desc(t);

    bool uniform = true;
    for (const auto& t : terms) uniform = uniform && t.factor == terms.front().factor;

    double alpha = 1.0, beta = 0.0, eps2 = 0.0;
    if (uniform) {
        alpha = terms.front().factor;
        for (std::size_t j = 0; j < terms.size(); ++j) {
            beta += std::abs(coeffs[j]);
            eps2 = std::max(eps2, terms[j].error);
        }
    } else {
        for (std::size_t j = 0; j < terms.size(); ++j) {
            if (terms[j].factor == 0.0) throw InputError("cannot normalise a zero-factor encoding");
            beta += std::abs(coeffs[j]) * terms[j].factor;
            eps2 = std::max(eps2, terms[j].error / terms[j].factor);
        }
    }

    BlockEncodingDesc out;
    out.factor = alpha * beta;
    out.error = alpha * prep_error + alpha * beta * eps2;
    int a = 0;
    bool known = true;
    for (const auto& t : terms) {
        if (!t.ancillas) known = false;
        else a = std::max(a, *t.ancillas);
        detail::merge_queries(out.queries, t.queries);
    }
    out.ancillas = known ? std::optional<int>(a + ceil_log2(terms.size())) : std::nullopt;
    return out;
}

/// Encoding of AB: (α_Aα_B, n_A + n_B, α_Aε_B + α_Bε_A).
inline BlockEncodingDesc product(const BlockEncodingDesc& A, const BlockEncodingDesc& B) {
    detail::check_desc(A);
    detail::check_desc(B);
    BlockEncodingDesc out;
    out.factor = A.factor * B.factor;
    out.error = A.factor * B.error + B.factor * A.error;
    out.ancillas = (A.ancillas && B.ancillas) ? std::optional<int>(*A.ancillas + *B.ancillas) : std::nullopt;
    out.queries = A.queries;
    detail::merge_queries(out.queries, B.queries);
    return out;
}

/// Product of J exact encodings through a counter register:
/// (Πα_j, max n_j + ⌈log₂ J⌉ + 1, 0).
inline BlockEncodingDesc compression_gadget(const std::vector<BlockEncodingDesc>& terms) {
    if (terms.empty()) throw InputError("compression gadget needs at least one encoding");
    BlockEncodingDesc out;
    int a = 0;
    bool known = true;
    for (const auto& t : terms) {
        detail::check_desc(t);
        if (t.error != 0.0) throw PreconditionError("compression gadget is stated for exact encodings only");
        out.factor *= t.factor;
        if (!t.ancillas) known = false;
        else a = std::max(a, *t.ancillas);
        detail::merge_queries(out.queries, t.queries);
    }
    out.ancillas = known ? std::optional<int>(a + ceil_log2(terms.size()) + 1) : std::nullopt;
    out.error = 0.0;
    return out;
}

/// Problem parameters behind the query-complexity formulas (all constants set to 1).
struct CostModel {
    double d = 1.0;
    double alpha = 1.0;
    double sigma = 0.0;
    double T = 1.0;
    double epsilon = 1e-3;
    double gT = 1.0;       ///< g(T) ≥ ‖u(0)‖/‖u(T)‖
    double gTildeT = 1.0;  ///< g̃(T) ≤ ‖u(T)‖
    double Q = 1.0;
    double eta = 1.0;

    /// Throws on invalid parameters; returns non-fatal warnings.
    std::vector<std::string> validate() const {
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigurationError("epsilon must lie in (0,1)");
        if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigurationError("alpha must lie in (0,2]");
        if (!(d >= 1.0) || !(sigma >= 0.0) || !(T > 0.0) || !(gT > 0.0) || !(gTildeT > 0.0) || !(Q > 0.0) ||
            !(eta > 0.0))
            throw ConfigurationError("cost model needs d >= 1, sigma >= 0 and positive T, g, g~, Q, eta");
        std::vector<std::string> warnings;
        if (Q > gT) warnings.emplace_back("Q exceeds g(T); the time-marching decay factor should satisfy Q <= g(T)");
        return warnings;
    }
};

struct CostEstimate {
    std::string method;
    double matrix_queries = 0.0;
    double state_prep_queries = 0.0;
    std::optional<double> gates;      ///< absent when the theorem gives no gate count
    std::vector<std::string> oracles;  ///< oracles counted by matrix_queries
};

namespace detail {

// Logarithms are floored at 1 so that every factor stays ≥ 1 and monotone.
inline double lg(double x) { return std::log(std::max(x, std::exp(1.0))); }

// L = d log d + log(T/g̃) + log(1/ε).
inline double spatial_log(const CostModel& m) {
    return std::max(m.d * lg(m.d) + lg(m.T / m.gTildeT) + lg(1.0 / m.epsilon), 1.0);
}

}  // namespace detail

/// g^{3/2} T^{3/2} ε^{-1/2} d^{α/2} L^{ασ/2} matrix queries, g state preparations,
/// matrix queries × d log² L gates.
inline CostEstimate cost_trotter(const CostModel& m) {
    m.validate();
    const double L = detail::spatial_log(m);
    CostEstimate c{"trotter", 0, 0, std::nullopt, {oracle::O1, oracle::O2}};
    c.matrix_queries = std::pow(m.gT, 1.5) * std::pow(m.T, 1.5) / std::sqrt(m.epsilon) * std::pow(m.d, m.alpha / 2) *
                       std::pow(L, m.alpha * m.sigma / 2);
    c.state_prep_queries = m.gT;
    c.gates = c.matrix_queries * m.d * std::pow(detail::lg(L), 2);
    return c;
}

/// Q T² d^α L^{2ασ} log(1/ε) matrix queries, Q state preparations.
inline CostEstimate cost_time_marching(const CostModel& m) {
    m.validate();
    const double L = detail::spatial_log(m);
    CostEstimate c{"time-marching", 0, 0, std::nullopt, {oracle::O1, oracle::O2, oracle::QFT}};
    c.matrix_queries = m.Q * m.T * m.T * std::pow(m.d, m.alpha) * std::pow(L, 2 * m.alpha * m.sigma) *
                       detail::lg(1.0 / m.epsilon);
    c.state_prep_queries = m.Q;
    return c;
}

/// g T d^{α/2} L^{ασ} log²(1/ε) matrix queries; state preparations drop one log(1/ε).
inline CostEstimate cost_dyson(const CostModel& m) {
    m.validate();
    const double L = detail::spatial_log(m);
    CostEstimate c{"dyson", 0, 0, std::nullopt, {oracle::O1, oracle::O2, oracle::QFT}};
    const double base = m.gT * m.T * std::pow(m.d, m.alpha / 2) * std::pow(L, m.alpha * m.sigma);
    const double le = detail::lg(1.0 / m.epsilon);
    c.matrix_queries = base * le * le;
    c.state_prep_queries = base * le;
    return c;
}

/// g² (T/ε) log³(g T d log d log(1/g̃)/ε) matrix queries, g state preparations, and
/// g² (T/ε) log(gT/ε) (d log²(d + log(T/g̃) + log(1/ε)) + log(gT/ε)) gates.
inline CostEstimate cost_lchs_ip(const CostModel& m) {
    m.validate();
    using detail::lg;
    CostEstimate c{"lchs-ip", 0, 0, std::nullopt, {oracle::O1, oracle::O2, oracle::HAM_T, oracle::SEL}};
    const double lead = m.gT * m.gT * m.T / m.epsilon;
    const double inner = lg(m.gT * m.T * m.d * lg(m.d) * lg(1.0 / m.gTildeT) / m.epsilon);
    c.matrix_queries = lead * inner * inner * inner;
    c.state_prep_queries = m.gT;
    const double lge = lg(m.gT * m.T / m.epsilon);
    const double inner2 = lg(m.d + lg(m.T / m.gTildeT) + lg(1.0 / m.epsilon));
    c.gates = lead * lge * (m.d * inner2 * inner2 + lge);
    return c;
}

struct CarlemanEncodingCost {
    double factor = 0.0;   ///< M d^α N^{2α}
    double queries = 0.0;  ///< M
};

inline CarlemanEncodingCost carleman_encoding_cost(int M, double d, double N, double alpha) {
    if (M < 1 || !(d >= 1.0) || !(N >= 1.0) || !(alpha > 0.0 && alpha <= 2.0))
        throw InputError("Carleman cost needs M >= 1, d >= 1, N >= 1 and alpha in (0,2]");
    return {M * std::pow(d, alpha) * std::pow(N, 2 * alpha), static_cast<double>(M)};
}

/// Least-squares slope of log y against log x.
inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("slope fit needs at least two matching points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("slope fit needs positive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw InputError("slope fit needs distinct abscissae");
    return (n * sxy - sx * sy) / den;
}

enum class CostMethod { Trotter, TimeMarching, Dyson, LchsIP };

inline const char* to_string(CostMethod m) {
    switch (m) {
        case CostMethod::Trotter: return "trotter";
        case CostMethod::TimeMarching: return "time-marching";
        case CostMethod::Dyson: return "dyson";
        default: return "lchs-ip";
    }
}

inline CostEstimate evaluate_cost(CostMethod method, const CostModel& m) {
    switch (method) {
        case CostMethod::Trotter: return cost_trotter(m);
        case CostMethod::TimeMarching: return cost_time_marching(m);
        case CostMethod::Dyson: return cost_dyson(m);
        default: return cost_lchs_ip(m);
    }
}

/// Exponents of matrix queries in (d, 1/ε, T, norm); polylogarithmic dependence is 0.
/// The norm is Q for time-marching and g(T) otherwise.
struct ExponentRow {
    double d = 0, inv_eps = 0, T = 0, norm = 0;
};

inline ExponentRow expected_exponents(CostMethod method, double alpha, double sigma) {
    switch (method) {
        case CostMethod::Trotter: return {alpha * (0.5 + sigma / 2), 0.5, 1.5, 1.5};
        case CostMethod::TimeMarching: return {alpha * (1 + 2 * sigma), 0.0, 2.0, 1.0};
        case CostMethod::Dyson: return {alpha * (0.5 + sigma), 0.0, 1.0, 1.0};
        default: return {0.0, 1.0, 1.0, 2.0};
    }
}

/// Base point at which logarithmic factors are nearly flat on a log-log scale.
inline CostModel audit_base_model(double alpha = 1.0, double sigma = 1.0) {
    CostModel m;
    m.d = 1e32;
    m.alpha = alpha;
    m.sigma = sigma;
    m.T = 1e3;
    m.epsilon = 1e-60;
    m.gT = 1e3;
    m.gTildeT = 1e-3;
    m.Q = 1e2;
    return m;
}

/// Regresses log(matrix queries) on each parameter varied alone over a decade-spaced
/// lattice around `base`.
inline ExponentRow fit_exponents(CostMethod method, const CostModel& base, int points = 5) {
    auto sweep = [&](auto set, double start) {
        std::vector<double> xs, ys;
        for (int i = 0; i < points; ++i) {
            const double x = start * std::pow(10.0, i);
            CostModel m = base;
            set(m, x);
            xs.push_back(x);
            ys.push_back(evaluate_cost(method, m).matrix_queries);
        }
        return fit_loglog_slope(xs, ys);
    };
    ExponentRow r;
    r.d = sweep([](CostModel& m, double x) { m.d = x; }, base.d);
    r.inv_eps = sweep([](CostModel& m, double x) { m.epsilon = 1.0 / x; }, 1.0 / base.epsilon);
    r.T = sweep([](CostModel& m, double x) { m.T = x; }, base.T);
    if (method == CostMethod::TimeMarching)
        r.norm = sweep([](CostModel& m, double x) { m.Q = x; m.gT = std::max(m.gT, x); }, base.Q);
    else
        r.norm = sweep([](CostModel& m, double x) { m.gT = x; }, base.gT);
    return r;
}

}  // namespace frakdiff
