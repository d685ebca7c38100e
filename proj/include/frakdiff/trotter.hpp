#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "frakdiff/errors.hpp"
#include "frakdiff/fft.hpp"
#include "frakdiff/linalg.hpp"
#include "frakdiff/problem.hpp"
#include "frakdiff/spectral.hpp"

namespace frakdiff {

/// r equal steps of length h = T/r over [0, T].
struct TrotterPlan {
    std::size_t r = 1;
    double h = 0.0;
    double T = 0.0;

    static TrotterPlan make(double T, std::size_t r) {
        if (r < 1) throw InputError("Trotter plan needs r >= 1");
        if (!(T > 0.0) || !std::isfinite(T)) throw InputError("Trotter plan needs a finite T > 0");
        return {r, T / static_cast<double>(r), T};
    }
};

/// Norms entering the second-order splitting bound, maximised over time.
struct TrotterErrorBudget {
    double maxC = 0.0;
    double maxCdot = 0.0;
    double maxCddot = 0.0;
    double normB = 0.0;
    double comm1 = 0.0;  ///< max_t ‖[B, C(t)]‖
    double comm2 = 0.0;  ///< max_t ‖[B, [B, C(t)]]‖
};

namespace detail {

struct StrangKernel {
    explicit StrangKernel(const SemiDiscreteSystem& s, double h)
        : system(s), fft(fft_shape(s.grid())),
          half((-0.5 * h * s.symbol().eigenvalues.array()).exp().cast<std::complex<double>>().matrix()),
          h(h) {}

    void step(Eigen::VectorXcd& v, double t0) const {
        fft.to_frequency_inplace(v);
        v.array() *= half.array();
        fft.to_physical_inplace(v);
        v.array() *= (-h * system.sample_C(t0 + 0.5 * h).array()).exp().cast<std::complex<double>>();
        fft.to_frequency_inplace(v);
        v.array() *= half.array();
        fft.to_physical_inplace(v);
    }

    const SemiDiscreteSystem& system;
    UnitaryFFT fft;
    Eigen::VectorXcd half;
    double h;
};

}  // namespace detail

/// One step S₂ = e^{-Bh/2} e^{-C(t0+h/2)h} e^{-Bh/2}.
inline StateVector s2_step(const StateVector& state, const SemiDiscreteSystem& system, double t0, double h) {
    if (!(h > 0.0)) throw InputError("Trotter step needs h > 0");
    if (!(state.grid == system.grid())) throw InputError("state and system live on different grids");
    StateVector out = state;
    detail::StrangKernel(system, h).step(out.data, t0);
    return out;
}

/// Product of r steps with midpoints (j + 1/2)h. `observer(j, v)` sees the state after step j.
template <class Observer = std::nullptr_t>
StateVector trotter_solve(const StateVector& u0, const SemiDiscreteSystem& system, const TrotterPlan& plan,
                          Observer&& observer = nullptr) {
    if (plan.r < 1 || !(plan.h > 0.0)) throw InputError("invalid Trotter plan");
    if (!(u0.grid == system.grid())) throw InputError("state and system live on different grids");
    const detail::StrangKernel kernel(system, plan.h);
    StateVector out = u0;
    for (std::size_t j = 0; j < plan.r; ++j) {
        kernel.step(out.data, static_cast<double>(j) * plan.h);
        if constexpr (!std::is_same_v<std::decay_t<Observer>, std::nullptr_t>) observer(j, out.data);
    }
    return out;
}

/// Dense Trotter propagator, one basis vector at a time.
inline Eigen::MatrixXcd trotter_propagator(const SemiDiscreteSystem& system, const TrotterPlan& plan) {
    const std::size_t n = system.grid().size();
    if (n > kDenseGuard) throw SizeGuardError("dense propagator requested above N^d = 4096");
    Eigen::MatrixXcd U(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        StateVector e(system.grid());
        e.data[static_cast<Eigen::Index>(j)] = 1.0;
        U.col(static_cast<Eigen::Index>(j)) = trotter_solve(e, system, plan).data;
    }
    return U;
}

/// T h² (‖C″‖/24 + (‖B‖+‖C‖)‖C′‖/4 + comm2/6 + comm1·‖C‖/4 + ‖C‖³/3).
inline double trotter_error_bound(const TrotterErrorBudget& b, double T, double h) {
    const double vals[] = {b.maxC, b.maxCdot, b.maxCddot, b.normB, b.comm1, b.comm2, T, h};
    for (double v : vals)
        if (!std::isfinite(v) || v < 0.0) throw InputError("Trotter budget entries must be finite and nonnegative");
    const double bracket = b.maxCddot / 24.0 + 0.25 * (b.normB + b.maxC) * b.maxCdot + b.comm2 / 6.0 +
                           0.25 * b.comm1 * b.maxC + b.maxC * b.maxC * b.maxC / 3.0;
    return T * h * h * bracket;
}

/// ‖[B, C(t)]‖ and ‖[B, [B, C(t)]]‖ from a dense B.
inline std::pair<double, double> commutator_norms(const Eigen::MatrixXd& B, const Eigen::VectorXd& c,
                                                  std::uint64_t seed = 0x5eed) {
    const Eigen::Index n = B.rows();
    Eigen::MatrixXd K1(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index j = 0; j < n; ++j) K1(j, k) = B(j, k) * (c[k] - c[j]);
    const Eigen::MatrixXd K2 = B * K1 - K1 * B;
    return {spectral_norm(K1, seed).value, spectral_norm(K2, seed).value};
}

inline std::pair<double, double> commutator_norms(const SemiDiscreteSystem& system, double t,
                                                  std::uint64_t seed = 0x5eed) {
    return commutator_norms(dense_B(system.symbol()), system.sample_C(t), seed);
}

/// Uniform mesh of `points` times over [0, T], endpoints included.
inline std::vector<double> budget_mesh(double T, int points = 64) {
    std::vector<double> mesh;
    mesh.reserve(static_cast<std::size_t>(points) + 2);
    mesh.push_back(0.0);
    for (int i = 0; i < points; ++i) mesh.push_back(T * (i + 0.5) / points);
    mesh.push_back(T);
    return mesh;
}

/// Budget maximised over `budget_mesh(T)`; commutators need the dense size guard.
inline TrotterErrorBudget measure_budget(const SemiDiscreteSystem& system, double T, int points = 64,
                                         std::uint64_t seed = 0x5eed) {
    TrotterErrorBudget b;
    b.normB = system.symbol().max_eigenvalue();
    const Eigen::MatrixXd B = dense_B(system.symbol());
    const bool frozen = system.time_independent();
    bool first = true;
    for (double t : budget_mesh(T, points)) {
        const Eigen::VectorXd c = system.sample_C(t);
        b.maxC = std::max(b.maxC, c.cwiseAbs().maxCoeff());
        b.maxCdot = std::max(b.maxCdot, system.sample_C_dot(t).cwiseAbs().maxCoeff());
        b.maxCddot = std::max(b.maxCddot, system.sample_C_ddot(t).cwiseAbs().maxCoeff());
        if (first || !frozen) {
            const auto [c1, c2] = commutator_norms(B, c, seed);
            b.comm1 = std::max(b.comm1, c1);
            b.comm2 = std::max(b.comm2, c2);
        }
        first = false;
    }
    return b;
}

/// Smallest r with trotter_error_bound(budget, T, T/r) ≤ ε / g(T).
inline std::size_t choose_steps(double epsilon, double T, const TrotterErrorBudget& budget, double gT = 1.0) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw PreconditionError("epsilon must lie in (0,1)");
    if (!(gT > 0.0)) throw PreconditionError("g(T) must be positive");
    if (!(T > 0.0)) throw PreconditionError("T must be positive");
    const double target = epsilon / gT;
    const double unit = trotter_error_bound(budget, T, T);  // bound at r = 1
    if (unit <= target) return 1;
    auto r = static_cast<std::size_t>(std::ceil(std::sqrt(unit / target)));
    auto fits = [&](std::size_t k) { return trotter_error_bound(budget, T, T / static_cast<double>(k)) <= target; };
    while (!fits(r)) ++r;
    while (r > 1 && fits(r - 1)) --r;
    return r;
}

}  // namespace frakdiff
