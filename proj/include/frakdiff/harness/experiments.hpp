#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "frakdiff/frakdiff.hpp"
#include "frakdiff/harness/config.hpp"
#include "frakdiff/harness/report.hpp"

namespace frakdiff::harness {

struct RunOptions {
    unsigned threads = 1;
};

using InitialFunction = std::function<double(std::span<const double>)>;

/// One drawn problem: everything except the grid, so it can be resampled at any N.
struct Instance {
    double alpha = 1.0;
    PotentialField potential;
    InitialFunction u0;
    double u0_scale = 1.0;
};

namespace detail {

inline PotentialField draw_potential(std::mt19937_64& rng, int dim, const RandomPotentialSpec& s) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_int_distribution<int> K(-2, 2);
    PotentialField p;
    p.offset = ConstantFn{1.0 + 0.5 * U(rng)};
    for (int m = 0; m < s.modes; ++m) {
        PotentialMode mode;
        mode.k.resize(static_cast<std::size_t>(dim));
        for (auto& k : mode.k) k = K(rng);
        if (std::all_of(mode.k.begin(), mode.k.end(), [](auto k) { return k == 0; })) mode.k[0] = 1;
        mode.basis = m % 2 == 0 ? ModeBasis::Cos : ModeBasis::Sin;
        if (s.time_dependent && m % 2 == 0)
            mode.coefficient = SinusoidFn{0.5 * U(rng), 2.0 + U(rng), U(rng), 0.5 * U(rng)};
        else if (s.time_dependent)
            mode.coefficient = PolynomialFn{{0.5 * U(rng), 0.5 * U(rng), 0.25 * U(rng)}};
        else
            mode.coefficient = ConstantFn{0.6 * U(rng)};
        p.modes.push_back(std::move(mode));
    }
    return p;
}

inline InitialFunction draw_initial(std::mt19937_64& rng, const InitialSpec& s) {
    constexpr double pi = std::numbers::pi;
    if (s.type == "sine") {
        const auto k = s.k;
        return [k](std::span<const double> x) {
            double ph = 0.0;
            for (std::size_t a = 0; a < x.size(); ++a) ph += static_cast<double>(k[a]) * x[a];
            return std::sin(2.0 * pi * ph);
        };
    }
    if (s.type == "constant") {
        const double v = s.value;
        return [v](std::span<const double>) { return v; };
    }
    if (s.type == "bump") {
        const double w = s.width;
        return [w](std::span<const double> x) {
            double v = 1.0 + 0.5 * std::cos(2 * pi * x[0]) + 0.25 * std::sin(6 * pi * x[0]);
            double bump = 1.0;
            for (double xa : x) {
                const double z = (xa - 0.5) / w;
                bump *= std::abs(z) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - z * z)) : 0.0;
            }
            return v + bump;
        };
    }
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> amp(4), ph(4);
    for (int i = 0; i < 4; ++i) {
        amp[static_cast<std::size_t>(i)] = U(rng);
        ph[static_cast<std::size_t>(i)] = 3.0 * U(rng);
    }
    return [amp, ph](std::span<const double> x) {
        double s = 0.0;
        for (double xa : x) s += xa;
        double v = 1.0;
        for (int k = 1; k <= 4; ++k)
            v += amp[static_cast<std::size_t>(k - 1)] / (k * k) *
                 std::cos(2.0 * pi * k * s + ph[static_cast<std::size_t>(k - 1)]);
        return v;
    };
}

inline StateVector sample_initial(const Instance& inst, const Grid& g) {
    StateVector s(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto x = g.coordinates(i);
        s.data[static_cast<Eigen::Index>(i)] = inst.u0_scale * inst.u0(x);
    }
    return s;
}

}  // namespace detail

/// Draws `count` instances from the seed in a fixed order (alpha, potential, u0 per instance).
inline std::vector<Instance> draw_instances(const ExperimentConfig& cfg, int count) {
    std::mt19937_64 rng(cfg.seed);
    const ProblemConfig& p = cfg.problem;
    std::vector<Instance> out;
    for (int i = 0; i < count; ++i) {
        Instance inst;
        inst.alpha = p.alpha.lo == p.alpha.hi ? p.alpha.lo : std::uniform_real_distribution<double>(p.alpha.lo, p.alpha.hi)(rng);
        inst.potential = p.potential.random ? detail::draw_potential(rng, p.dim, *p.potential.random)
                                            : p.potential.explicit_field;
        inst.u0 = detail::draw_initial(rng, p.u0);
        if (p.u0.norm) {
            inst.u0_scale = 1.0;
            const double n0 = detail::sample_initial(inst, Grid(p.dim, p.N)).norm();
            if (!(n0 > 0.0)) throw ConfigurationError("/problem/u0: cannot rescale a zero initial state");
            inst.u0_scale = *p.u0.norm / n0;
        }
        out.push_back(std::move(inst));
    }
    return out;
}

inline SemiDiscreteSystem make_system(const ExperimentConfig& cfg, const Instance& inst, std::size_t N) {
    return SemiDiscreteSystem(Grid(cfg.problem.dim, N), inst.alpha, inst.potential, cfg.problem.shift);
}

namespace detail {

/// Fits log(y) against log(x) when at least three points exist; otherwise warns.
inline std::optional<double> maybe_slope(const std::vector<double>& x, const std::vector<double>& y,
                                         const std::string& what, Report& rep) {
    if (x.size() < 3) {
        rep.warnings.push_back("slope for " + what + " omitted: fewer than 3 sweep values");
        return std::nullopt;
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            rep.warnings.push_back("slope for " + what + " omitted: nonpositive data");
            return std::nullopt;
        }
    return fit_loglog_slope(x, y);
}

inline void check_row(Report& rep, const Table& t, bool ok) {
    if (!ok) rep.violations.push_back(t.describe(t.rows().size() - 1));
}

inline std::vector<double> sweep_values(const ExperimentConfig& cfg, double fallback) {
    if (cfg.sweep) return cfg.sweep->values;
    return {fallback};
}

inline std::string sweep_param(const ExperimentConfig& cfg, const std::string& fallback) {
    return cfg.sweep ? cfg.sweep->parameter : fallback;
}

inline Cell opt_cell(std::optional<double> v) { return v ? Cell(*v) : Cell{}; }

inline double max_abs_C(const SemiDiscreteSystem& sys, double T) {
    double m = 0.0;
    for (double t : budget_mesh(T)) m = std::max(m, sys.sample_C(t).cwiseAbs().maxCoeff());
    return m;
}

inline LchsStrategy strategy_of(const MethodConfig& m) {
    return m.strategy == "spectral" ? LchsStrategy::Spectral : LchsStrategy::InteractionPicture;
}

}  // namespace detail

// ---------------------------------------------------------------------------- verify-trotter

inline Report run_verify_trotter(const ExperimentConfig& cfg, const RunOptions& opt) {
    Report rep;
    const std::string param = detail::sweep_param(cfg, "r");
    const auto values = detail::sweep_values(cfg, param == "r" ? double(cfg.method.r) : double(cfg.problem.N));
    const auto instances = draw_instances(cfg, cfg.method.systems);
    const double T = cfg.problem.T;

    struct Prepared {
        SemiDiscreteSystem sys;
        StateVector u0;
        TrotterErrorBudget budget;
        Eigen::MatrixXcd U;  // operator-level reference
        StateVector u_ref;
        bool operator_level = false;
    };
    // (instance, N) pairs needing a reference
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    for (std::size_t s = 0; s < instances.size(); ++s) {
        if (param == "N")
            for (double v : values) keys.emplace_back(s, static_cast<std::size_t>(v));
        else
            keys.emplace_back(s, cfg.problem.N);
    }
    const auto prepared = parallel_map(keys.size(), opt.threads, [&](std::size_t i) {
        const auto [s, N] = keys[i];
        const auto sys = make_system(cfg, instances[s], N);
        auto u0 = detail::sample_initial(instances[s], sys.grid());
        const bool op = cfg.method.operator_level && sys.grid().size() <= 256;
        Prepared p{sys, u0, measure_budget(sys, T, 64, cfg.seed), {}, reference_solve(sys, u0, T, cfg.tol.reference), op};
        if (op) p.U = reference_propagator(sys, T, cfg.tol.reference);
        return p;
    });
    if (cfg.method.operator_level)
        for (const auto& p : prepared)
            if (!p.operator_level) {
                rep.warnings.push_back("grids above 256 points use vector-level errors");
                break;
            }

    struct Task {
        std::size_t prep;
        std::size_t system;
        double value;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < instances.size(); ++s)
        for (std::size_t v = 0; v < values.size(); ++v)
            tasks.push_back({param == "N" ? s * values.size() + v : s, s, values[v]});

    struct Row {
        std::size_t r;
        double h, error, bound;
        std::optional<double> eps;
        double seconds = 0.0;
    };
    auto run_task = [&](const Task& t) {
        const Prepared& p = prepared[t.prep];
        Row row{};
        if (param == "epsilon") {
            row.eps = t.value;
            const double gT = p.u0.norm() / p.u_ref.norm();
            row.r = choose_steps(t.value, T, p.budget, gT);
            row.h = T / static_cast<double>(row.r);
            const auto got = trotter_solve(p.u0, p.sys, TrotterPlan::make(T, row.r));
            row.error = (got.data - p.u_ref.data).norm() / p.u_ref.norm();
            row.bound = t.value;
            return row;
        }
        row.r = param == "r" ? static_cast<std::size_t>(t.value) : cfg.method.r;
        const auto plan = TrotterPlan::make(T, row.r);
        row.h = plan.h;
        row.bound = trotter_error_bound(p.budget, T, plan.h);
        if (p.operator_level) {
            row.error = operator_norm(trotter_propagator(p.sys, plan) - p.U);
        } else {
            const auto got = trotter_solve(p.u0, p.sys, plan);
            row.error = (got.data - p.u_ref.data).norm() / p.u0.norm();
        }
        return row;
    };
    const auto rows = parallel_map(tasks.size(), opt.threads, [&](std::size_t i) {
        double secs = 0.0;
        Row row = timed(secs, [&] { return run_task(tasks[i]); });
        row.seconds = secs;
        return row;
    });

    rep.table = Table({"system", "alpha", "N", "r", "h", "epsilon", "error", "bound", "satisfied"});
    nlohmann::json fits = nlohmann::json::array();
    double order_min = 1e300, order_max = -1e300;
    for (std::size_t s = 0; s < instances.size(); ++s) {
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].system != s) continue;
            const Row& r = rows[i];
            const Prepared& p = prepared[tasks[i].prep];
            const bool ok = r.error <= r.bound;
            rep.table.add({static_cast<long long>(s), instances[s].alpha, static_cast<long long>(p.sys.grid().points_per_axis()),
                           static_cast<long long>(r.r), r.h, detail::opt_cell(r.eps), r.error, r.bound, ok});
            detail::check_row(rep, rep.table, ok);
            rep.row_seconds.push_back(r.seconds);
            if (param == "r") {
                xs.push_back(double(r.r));
                ys.push_back(r.error);
            } else if (param == "N") {
                xs.push_back(double(p.sys.grid().points_per_axis()));
                ys.push_back(r.error);
            } else {
                xs.push_back(1.0 / *r.eps);
                ys.push_back(double(r.r));
            }
        }
        const std::string what = param == "r" ? "error vs r" : param == "N" ? "error vs N" : "r vs 1/epsilon";
        const auto slope = detail::maybe_slope(xs, ys, what + " (system " + std::to_string(s) + ")", rep);
        fits.push_back({{"system", s}, {"alpha", instances[s].alpha}, {"fit", what},
                        {"slope", slope ? nlohmann::json(*slope) : nlohmann::json(nullptr)}});
        if (slope && param == "r") {
            order_min = std::min(order_min, -*slope);
            order_max = std::max(order_max, -*slope);
        }
    }
    rep.results["fits"] = fits;
    rep.results["error_metric"] = param == "epsilon" ? "||u_trotter - u_ref|| / ||u_ref||"
                                  : cfg.method.operator_level ? "operator norm of propagator difference"
                                                              : "||u_trotter - u_ref|| / ||u0||";
    if (param == "r" && order_min <= order_max) {
        rep.results["order_min"] = order_min;
        rep.results["order_max"] = order_max;
        rep.results["order_in_range"] = order_min >= 1.9 && order_max <= 2.1;
        if (!(order_min >= 1.9 && order_max <= 2.1))
            rep.warnings.push_back("fitted Trotter order outside [1.9, 2.1]; h may be pre-asymptotic");
    }
    return rep;
}

// ---------------------------------------------------------------------------- verify-lchs

inline Report run_verify_lchs(const ExperimentConfig& cfg, const RunOptions& opt) {
    Report rep;
    const MethodConfig& m = cfg.method;
    const std::string param = detail::sweep_param(cfg, "Xi");
    const double T = cfg.problem.T;
    std::vector<double> values;
    if (cfg.sweep) values = cfg.sweep->values;
    else if (param == "Xi" && m.Xi) values = {*m.Xi};
    else throw ConfigurationError("/sweep: verify-lchs needs a sweep or method.Xi");
    if (param == "M_quad" && !m.Xi) throw ConfigurationError("/method/Xi: required when sweeping M_quad");
    if (m.empirical_M && param != "epsilon") rep.warnings.push_back("empirical_M is only evaluated for epsilon sweeps");

    auto node_count = [&](double Xi) {
        if (m.M_quad && param == "Xi") return *m.M_quad;
        const double M = std::ceil(m.M_per_Xi2 * Xi * Xi);
        if (!(M < 1e15)) throw SizeGuardError("quadrature node count overflows");
        return static_cast<std::size_t>(M);
    };

    if (m.scalar_c0) {
        // Scalar system u′ = -c0 u: the rule's output is a single phase sum.
        const double c0 = *m.scalar_c0, s = c0 * T, exact = std::exp(-s);
        struct Row {
            double Xi;
            std::size_t M;
            double error, bound, eps_prime;
        };
        const auto rows = timed_map(values.size(), opt.threads, rep.row_seconds, [&](std::size_t i) {
            Row r{};
            const double v = values[i];
            if (param == "epsilon") {
                const auto p = choose_parameters(v, T, 0.0, c0, 1.0 / exact);
                r.Xi = p.Xi;
                r.M = p.M;
                r.eps_prime = p.eps_prime;
            } else {
                r.Xi = param == "Xi" ? v : *m.Xi;
                r.M = param == "Xi" ? node_count(v) : static_cast<std::size_t>(v);
            }
            r.error = std::abs(phase_sum(build_quadrature(r.Xi, r.M), s) - exact);
            r.bound = lchs_error_bound(r.Xi, r.M, T, 0.0, c0);
            return r;
        });
        rep.table = Table({"Xi", "M", "error", "tail", "tail_ratio", "bound", "satisfied"});
        std::vector<double> xs, ys;
        bool tracks = true;
        for (const auto& r : rows) {
            const double tail = 2.0 / (std::numbers::pi * r.Xi);
            const bool ok = r.error <= r.bound + 1e-15;
            rep.table.add({r.Xi, static_cast<long long>(r.M), r.error, tail, r.error / tail, r.bound, ok});
            detail::check_row(rep, rep.table, ok);
            tracks = tracks && r.error / tail >= 0.5 && r.error / tail <= 2.0;
            xs.push_back(param == "M_quad" ? double(r.M) : r.Xi);
            ys.push_back(r.error);
        }
        rep.results["mode"] = "scalar";
        rep.results["tail_tracking"] = tracks;
        if (auto sl = detail::maybe_slope(xs, ys, "error vs " + param, rep)) rep.results["slope"] = *sl;
        return rep;
    }

    const auto inst = draw_instances(cfg, 1).front();
    const auto sys = make_system(cfg, inst, cfg.problem.N);
    const auto u0 = detail::sample_initial(inst, sys.grid());
    const auto u_ref = reference_solve(sys, u0, T, cfg.tol.reference);
    const double normB = sys.symbol().max_eigenvalue();
    const double maxC = detail::max_abs_C(sys, T);
    const double gT = u0.norm() / u_ref.norm();
    const LchsOptions lopt{cfg.tol.integrator, detail::strategy_of(m), 1};
    const bool real_input = u0.data.imag().isZero(0.0);

    auto error_of = [&](double Xi, std::size_t M) {
        const auto got = lchs_solve(u0, sys, T, build_quadrature(Xi, M), lopt);
        return std::make_pair((got.data - u_ref.data).norm() / u0.norm(),
                              got.data.imag().cwiseAbs().maxCoeff() / u0.norm());
    };
    struct Row {
        double Xi;
        std::size_t M;
        double error, imag, bound;
        std::optional<double> eps;
        std::optional<double> M_emp;
    };
    const auto rows = timed_map(values.size(), opt.threads, rep.row_seconds, [&](std::size_t i) {
        Row r{};
        const double v = values[i];
        if (param == "epsilon") {
            const auto p = choose_parameters(v, T, normB, maxC, gT);
            r.Xi = p.Xi;
            r.M = p.M;
            r.eps = v;
        } else {
            r.Xi = param == "Xi" ? v : *m.Xi;
            r.M = param == "Xi" ? node_count(v) : static_cast<std::size_t>(v);
        }
        if (lopt.strategy == LchsStrategy::InteractionPicture && r.M > (std::size_t{1} << 20))
            throw SizeGuardError("interaction-picture LCHS with M = " + std::to_string(r.M) +
                                 " nodes; use strategy \"spectral\"");
        std::tie(r.error, r.imag) = error_of(r.Xi, r.M);
        const double integ = lopt.strategy == LchsStrategy::InteractionPicture ? double(r.M) * lopt.tol : 0.0;
        r.bound = lchs_error_bound(r.Xi, r.M, T, normB, maxC) + integ + 10.0 * cfg.tol.reference;
        if (r.eps) r.bound = std::min(r.bound, *r.eps);
        if (m.empirical_M && r.eps) {
            std::size_t M = r.M, best = r.M;
            while (M > 1) {
                M = (M + 1) / 2;
                if (error_of(r.Xi, M).first > *r.eps) break;
                best = M;
            }
            r.M_emp = double(best);
        }
        return r;
    });
    rep.table = Table({"Xi", "M", "epsilon", "error", "imag_max", "bound", "M_empirical", "satisfied"});
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
        const double imag_bound = lchs_error_bound(r.Xi, r.M, T, normB, maxC) + 10.0 * lopt.tol;
        const bool ok = r.error <= r.bound && (!real_input || r.imag <= imag_bound);
        rep.table.add({r.Xi, static_cast<long long>(r.M), detail::opt_cell(r.eps), r.error, r.imag, r.bound,
                       detail::opt_cell(r.M_emp), ok});
        detail::check_row(rep, rep.table, ok);
        xs.push_back(param == "M_quad" ? double(r.M) : param == "Xi" ? r.Xi : 1.0 / *r.eps);
        ys.push_back(r.error);
    }
    rep.results["mode"] = "grid";
    rep.results["normB"] = normB;
    rep.results["maxC"] = maxC;
    rep.results["gT"] = gT;
    rep.results["strategy"] = m.strategy;
    if (auto sl = detail::maybe_slope(xs, ys, "error vs " + param, rep)) rep.results["slope"] = *sl;
    return rep;
}

// ---------------------------------------------------------------------------- verify-carleman

inline Report run_verify_carleman(const ExperimentConfig& cfg, const RunOptions& opt) {
    Report rep;
    const MethodConfig& m = cfg.method;
    const double T = cfg.problem.T;
    const auto values = detail::sweep_values(cfg, double(m.M_carl));
    const auto inst = draw_instances(cfg, 1).front();
    const NonlinearSystem sys(make_system(cfg, inst, cfg.problem.N), cfg.problem.a);
    const auto u0 = detail::sample_initial(inst, sys.base().grid());
    const auto u_ref = nonlinear_reference_solve(u0, sys, T, cfg.tol.reference);
    std::vector<double> times = m.times;
    std::sort(times.begin(), times.end());
    for (double t : times)
        if (!(t >= 0.0 && t <= T)) throw ConfigurationError("/method/times: output times must lie in [0, T]");

    struct Row {
        int M;
        std::size_t dim;
        double error;
        std::optional<double> padding, equivalence;
    };
    const auto rows = timed_map(values.size(), opt.threads, rep.row_seconds, [&](std::size_t i) {
        const int M = static_cast<int>(values[i]);
        Row r{M, 0, 0.0, {}, {}};
        for (int k = 1; k <= M; ++k) r.dim += int_pow(sys.n(), k);
        const auto w = carleman_solve(u0, sys, M, T, cfg.tol.integrator, times);
        r.error = (w.w1.data - u_ref.data).norm() / u0.norm();
        if (int_pow(sys.n(), M) * static_cast<std::size_t>(M) <= kCarlemanGuard) {
            const auto y = extended_solve(extended_embed(u0.data, M), sys, M, T, cfg.tol.integrator, times);
            double pad = extended_padding_norm(y.y, sys.n(), M);
            double eq = (extended_trailing(y.y, sys.n(), M) - w.w).norm();
            for (std::size_t k = 0; k < times.size(); ++k) {
                pad = std::max(pad, extended_padding_norm(y.samples[k], sys.n(), M));
                eq = std::max(eq, (extended_trailing(y.samples[k], sys.n(), M) - w.samples[k]).norm());
            }
            r.padding = pad;
            r.equivalence = eq;
        }
        return r;
    });
    rep.table = Table({"M_carl", "dimension", "error", "padding_max", "equivalence_max", "satisfied"});
    std::vector<double> xs, ys;
    bool monotone = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const bool ok = (!r.padding || *r.padding <= m.equivalence_tol) &&
                        (!r.equivalence || *r.equivalence <= m.equivalence_tol);
        rep.table.add({static_cast<long long>(r.M), static_cast<long long>(r.dim), r.error, detail::opt_cell(r.padding),
                       detail::opt_cell(r.equivalence), ok});
        detail::check_row(rep, rep.table, ok);
        if (!r.padding) rep.warnings.push_back("extended system skipped at M=" + std::to_string(r.M) + " (size guard)");
        if (i > 0 && !(r.error < rows[i - 1].error)) monotone = false;
        xs.push_back(double(r.M));
        ys.push_back(r.error);
    }
    rep.results["monotone_decrease"] = monotone;
    if (auto sl = detail::maybe_slope(xs, ys, "error vs M_carl", rep)) rep.results["slope"] = *sl;
    return rep;
}

// ---------------------------------------------------------------------------- verify-spatial

inline Report run_verify_spatial(const ExperimentConfig& cfg, const RunOptions& opt) {
    Report rep;
    const MethodConfig& m = cfg.method;
    const double T = cfg.problem.T;
    const auto values = detail::sweep_values(cfg, double(cfg.problem.N));
    const auto inst = draw_instances(cfg, 1).front();
    const std::size_t Nref = m.N_ref;
    if (std::pow(double(Nref), cfg.problem.dim) > double(1u << 22))
        throw SizeGuardError("reference grid N_ref^d above 2^22 points");
    for (double v : values)
        if (static_cast<std::size_t>(v) > Nref || Nref % static_cast<std::size_t>(v) != 0)
            throw ConfigurationError("/sweep/values: every N must divide N_ref");
    const auto sys_ref = make_system(cfg, inst, Nref);
    const auto ref = reference_solve(sys_ref, detail::sample_initial(inst, sys_ref.grid()), T, cfg.tol.reference);

    const auto errors = timed_map(values.size(), opt.threads, rep.row_seconds, [&](std::size_t i) {
        const auto N = static_cast<std::size_t>(values[i]);
        const auto sys = make_system(cfg, inst, N);
        const auto sol = reference_solve(sys, detail::sample_initial(inst, sys.grid()), T, cfg.tol.reference);
        const Grid& g = sys.grid();
        const auto stride = static_cast<std::int64_t>(Nref / N);
        double err = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            auto idx = g.unflatten(j);
            for (auto& c : idx) c *= stride;
            err = std::max(err, std::abs(sol.data[static_cast<Eigen::Index>(j)] -
                                         ref.data[static_cast<Eigen::Index>(sys_ref.grid().flatten(idx))]));
        }
        return err;
    });
    rep.table = Table({"N", "error", "local_slope", "bound", "satisfied"});
    std::vector<double> slopes;
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::optional<double> slope;
        if (i > 0 && errors[i] > 0.0 && errors[i - 1] > 0.0) {
            slope = std::log(errors[i] / errors[i - 1]) / std::log(values[i] / values[i - 1]);
            slopes.push_back(*slope);
        }
        std::optional<double> bound;
        if (m.bound_p) {
            SpatialErrorInputs in{*m.bound_p, m.bound_deriv_norm, T, 0.0, 1.0};
            bound = spatial_error_bound(in, Grid(cfg.problem.dim, static_cast<std::size_t>(values[i])), inst.alpha);
        }
        const bool ok = !bound || errors[i] <= *bound;
        rep.table.add({static_cast<long long>(values[i]), errors[i], detail::opt_cell(slope), detail::opt_cell(bound), ok});
        detail::check_row(rep, rep.table, ok);
    }
    if (slopes.size() >= 2) {
        // log error falls faster than linearly in log N when the finest local slope is the steepest end
        rep.results["superlinear_log_decay"] = slopes.back() < slopes.front();
        rep.results["local_slopes"] = slopes;
    } else {
        rep.warnings.push_back("superlinear decay flag needs at least 3 values of N");
    }
    if (auto sl = detail::maybe_slope(values, errors, "error vs N", rep)) rep.results["slope"] = *sl;
    return rep;
}

// ---------------------------------------------------------------------------- estimate-cost

inline CostModel cost_model_from(const nlohmann::json& j) {
    CostModel m;
    auto get = [&](const char* k, double& dst) {
        if (j.contains(k)) dst = j.at(k).get<double>();
    };
    get("d", m.d);
    get("alpha", m.alpha);
    get("sigma", m.sigma);
    get("T", m.T);
    get("epsilon", m.epsilon);
    get("gT", m.gT);
    get("gTildeT", m.gTildeT);
    get("Q", m.Q);
    get("eta", m.eta);
    return m;
}

inline CostMethod cost_method_from(const std::string& s) {
    if (s == "trotter") return CostMethod::Trotter;
    if (s == "time-marching") return CostMethod::TimeMarching;
    if (s == "dyson") return CostMethod::Dyson;
    return CostMethod::LchsIP;
}

inline Report run_estimate_cost(const ExperimentConfig& cfg, const RunOptions&) {
    Report rep;
    const MethodConfig& mc = cfg.method;
    const CostModel base = cost_model_from(mc.model);
    for (auto& w : base.validate()) rep.warnings.push_back(w);
    const auto values = detail::sweep_values(cfg, base.epsilon);
    rep.table = Table({"method", "d", "alpha", "sigma", "T", "epsilon", "gT", "matrix_queries", "state_prep_queries", "gates"});
    nlohmann::json slopes = nlohmann::json::object();
    for (const auto& name : mc.methods) {
        std::vector<double> xs, ys;
        for (double eps : values) {
            CostModel m = base;
            m.epsilon = eps;
            const auto c = evaluate_cost(cost_method_from(name), m);
            rep.table.add({name, m.d, m.alpha, m.sigma, m.T, m.epsilon, m.gT, c.matrix_queries, c.state_prep_queries,
                           detail::opt_cell(c.gates)});
            xs.push_back(1.0 / eps);
            ys.push_back(c.matrix_queries);
        }
        if (cfg.sweep)
            if (auto sl = detail::maybe_slope(xs, ys, name + " queries vs 1/epsilon", rep)) slopes[name] = *sl;
    }
    if (!slopes.empty()) rep.results["epsilon_slopes"] = slopes;

    if (mc.audit) {
        Table ex({"method", "parameter", "fitted", "expected", "deviation", "within_tolerance"});
        const CostModel ab = audit_base_model(base.alpha, base.sigma);
        for (const auto& name : mc.methods) {
            const auto method = cost_method_from(name);
            const auto fit = fit_exponents(method, ab);
            const auto want = expected_exponents(method, ab.alpha, ab.sigma);
            const std::pair<const char*, std::pair<double, double>> cols[] = {
                {"d", {fit.d, want.d}}, {"1/epsilon", {fit.inv_eps, want.inv_eps}}, {"T", {fit.T, want.T}},
                {"norm", {fit.norm, want.norm}}};
            for (const auto& [p, fw] : cols) {
                const double dev = std::abs(fw.first - fw.second);
                const bool ok = dev <= mc.audit_tolerance;
                ex.add({name, std::string(p), fw.first, fw.second, dev, ok});
                if (!ok) rep.violations.push_back("exponent audit: " + ex.describe(ex.rows().size() - 1));
            }
        }
        rep.extra_tables.emplace_back("exponents", std::move(ex));
        rep.results["audit_base"] = {{"d", ab.d}, {"T", ab.T}, {"epsilon", ab.epsilon}, {"gT", ab.gT},
                                     {"gTildeT", ab.gTildeT}, {"Q", ab.Q}, {"alpha", ab.alpha}, {"sigma", ab.sigma}};
    }
    return rep;
}

// ---------------------------------------------------------------------------- solvers

namespace detail {

inline Table state_table(const StateVector& s) {
    std::vector<std::string> header{"index"};
    for (int a = 0; a < s.grid.dim(); ++a) header.push_back("x" + std::to_string(a));
    header.push_back("re");
    header.push_back("im");
    Table t(header);
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        std::vector<Cell> row{static_cast<long long>(i)};
        for (double x : s.grid.coordinates(i)) row.emplace_back(x);
        row.emplace_back(s.data[static_cast<Eigen::Index>(i)].real());
        row.emplace_back(s.data[static_cast<Eigen::Index>(i)].imag());
        t.add(std::move(row));
    }
    return t;
}

}  // namespace detail

inline Report run_solve_linear(const ExperimentConfig& cfg, const RunOptions& opt) {
    Report rep;
    const MethodConfig& m = cfg.method;
    const double T = cfg.problem.T;
    const auto inst = draw_instances(cfg, 1).front();
    const auto sys = make_system(cfg, inst, cfg.problem.N);
    const auto u0 = detail::sample_initial(inst, sys.grid());
    const bool need_ref = m.compare_reference || m.epsilon;
    std::optional<StateVector> ref;
    if (need_ref) ref = reference_solve(sys, u0, T, cfg.tol.reference);
    const double gT = ref ? u0.norm() / ref->norm() : 1.0;

    StateVector out(sys.grid());
    std::optional<double> bound;
    if (m.solver == "reference") {
        out = ref ? *ref : reference_solve(sys, u0, T, cfg.tol.reference);
    } else if (m.solver == "trotter") {
        std::optional<TrotterErrorBudget> budget;
        if (sys.grid().size() <= kDenseGuard) budget = measure_budget(sys, T, 64, cfg.seed);
        else rep.warnings.push_back("grid too large for the commutator budget; no Trotter bound reported");
        std::size_t r = m.r;
        if (m.epsilon) {
            if (!budget) throw SizeGuardError("choosing r from epsilon needs the dense commutator budget");
            r = choose_steps(*m.epsilon, T, *budget, gT);
        }
        const auto plan = TrotterPlan::make(T, r);
        out = trotter_solve(u0, sys, plan);
        if (budget) bound = trotter_error_bound(*budget, T, plan.h);
        rep.results["r"] = r;
    } else {
        double Xi = 0;
        std::size_t M = 0;
        const double normB = sys.symbol().max_eigenvalue(), maxC = detail::max_abs_C(sys, T);
        if (m.epsilon) {
            const auto p = choose_parameters(*m.epsilon, T, normB, maxC, gT);
            Xi = p.Xi;
            M = p.M;
        } else {
            if (!m.Xi || !m.M_quad) throw ConfigurationError("/method: lchs needs epsilon or both Xi and M_quad");
            Xi = *m.Xi;
            M = *m.M_quad;
        }
        const LchsOptions lopt{cfg.tol.integrator, detail::strategy_of(m), opt.threads};
        out = lchs_solve(u0, sys, T, build_quadrature(Xi, M), lopt);
        bound = lchs_error_bound(Xi, M, T, normB, maxC) +
                (lopt.strategy == LchsStrategy::InteractionPicture ? double(M) * lopt.tol : 0.0) +
                10.0 * cfg.tol.reference;
        rep.results["Xi"] = Xi;
        rep.results["M"] = M;
    }
    rep.table = detail::state_table(out);
    rep.results["solver"] = m.solver;
    rep.results["norm_u0"] = u0.norm();
    rep.results["norm_uT"] = out.norm();
    if (ref && m.solver != "reference") {
        const double err = (out.data - ref->data).norm() / u0.norm();
        rep.results["error_vs_reference"] = err;
        if (bound) {
            rep.results["bound"] = *bound;
            if (!(err <= *bound))
                rep.violations.push_back("solve error " + format_real(err) + " exceeds bound " + format_real(*bound));
        }
    }
    return rep;
}

inline Report run_solve_nonlinear(const ExperimentConfig& cfg, const RunOptions&) {
    Report rep;
    const MethodConfig& m = cfg.method;
    const double T = cfg.problem.T;
    const auto inst = draw_instances(cfg, 1).front();
    const NonlinearSystem sys(make_system(cfg, inst, cfg.problem.N), cfg.problem.a);
    const auto u0 = detail::sample_initial(inst, sys.base().grid());
    StateVector out(u0.grid);
    if (m.solver == "reference") {
        out = nonlinear_reference_solve(u0, sys, T, cfg.tol.reference);
    } else if (m.solver == "carleman") {
        out = carleman_solve(u0, sys, m.M_carl, T, cfg.tol.integrator).w1;
    } else {
        const auto y = extended_solve(extended_embed(u0.data, m.M_carl), sys, m.M_carl, T, cfg.tol.integrator);
        out = StateVector(u0.grid, extended_trailing(y.y, sys.n(), m.M_carl).head(static_cast<Eigen::Index>(sys.n())));
        rep.results["padding_norm"] = extended_padding_norm(y.y, sys.n(), m.M_carl);
    }
    rep.table = detail::state_table(out);
    rep.results["solver"] = m.solver;
    rep.results["norm_u0"] = u0.norm();
    rep.results["norm_uT"] = out.norm();
    if (m.compare_reference && m.solver != "reference") {
        const auto ref = nonlinear_reference_solve(u0, sys, T, cfg.tol.reference);
        rep.results["error_vs_reference"] = (out.data - ref.data).norm() / u0.norm();
    }
    return rep;
}

inline Report run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    switch (cfg.kind) {
        case Kind::SolveLinear: return run_solve_linear(cfg, opt);
        case Kind::SolveNonlinear: return run_solve_nonlinear(cfg, opt);
        case Kind::VerifyTrotter: return run_verify_trotter(cfg, opt);
        case Kind::VerifyLchs: return run_verify_lchs(cfg, opt);
        case Kind::VerifyCarleman: return run_verify_carleman(cfg, opt);
        case Kind::VerifySpatial: return run_verify_spatial(cfg, opt);
        default: return run_estimate_cost(cfg, opt);
    }
}

}  // namespace frakdiff::harness
