#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "frakdiff/errors.hpp"
#include "frakdiff/fft.hpp"
#include "frakdiff/grid.hpp"
#include "frakdiff/ode.hpp"
#include "frakdiff/potential.hpp"
#include "frakdiff/spectral.hpp"

namespace frakdiff {

/// Largest N^d for which dense (N^d × N^d) operators are materialised.
inline constexpr std::size_t kDenseGuard = 4096;

/// du/dt = -B u - C(t) u on a periodic grid.
///
/// When `shifted` is set, C(t) holds c(t, n/N) - γ(t) with γ(t) = min_n c(t, n/N)
/// evaluated on the grid at the query time itself, so C(t) ≥ 0 for every t.
/// Its time derivatives subtract the derivative of c at the minimising node.
class SemiDiscreteSystem {
public:
    SemiDiscreteSystem(FourierSymbol symbol, PotentialField potential, bool shifted = false)
        : symbol_(std::move(symbol)), potential_(std::move(potential)), shifted_(shifted) {
        const Grid& g = symbol_.grid;
        const auto n = static_cast<Eigen::Index>(g.size());
        profiles_.resize(n, static_cast<Eigen::Index>(potential_.modes.size()));
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto x = g.coordinates(static_cast<std::size_t>(i));
            for (std::size_t m = 0; m < potential_.modes.size(); ++m)
                profiles_(i, static_cast<Eigen::Index>(m)) = PotentialField::profile(potential_.modes[m], x);
        }
    }

    SemiDiscreteSystem(const Grid& grid, double alpha, PotentialField potential, bool shifted = false)
        : SemiDiscreteSystem(make_symbol(grid, alpha), std::move(potential), shifted) {}

    const Grid& grid() const noexcept { return symbol_.grid; }
    const FourierSymbol& symbol() const noexcept { return symbol_; }
    const PotentialField& potential() const noexcept { return potential_; }
    bool shifted() const noexcept { return shifted_; }
    bool time_independent() const { return potential_.time_independent(); }

    SemiDiscreteSystem with_shift(bool on = true) const { return SemiDiscreteSystem(symbol_, potential_, on); }

    /// ∂_t^order c(t, n/N) of the unshifted potential.
    Eigen::VectorXd sample_raw(double t, int order = 0) const {
        Eigen::VectorXd coef(profiles_.cols());
        for (std::size_t m = 0; m < potential_.modes.size(); ++m)
            coef[static_cast<Eigen::Index>(m)] = evaluate(potential_.modes[m].coefficient, t, order);
        Eigen::VectorXd v = profiles_ * coef;
        v.array() += evaluate(potential_.offset, t, order);
        return v;
    }

    /// γ(t) = min over grid nodes of c(t, ·).
    double gamma(double t) const { return sample_raw(t).minCoeff(); }

    Eigen::VectorXd sample_C(double t) const { return sample_order(t, 0); }
    Eigen::VectorXd sample_C_dot(double t) const { return sample_order(t, 1); }
    Eigen::VectorXd sample_C_ddot(double t) const { return sample_order(t, 2); }

private:
    Eigen::VectorXd sample_order(double t, int order) const {
        Eigen::VectorXd v = sample_raw(t, order);
        if (!shifted_) return v;
        Eigen::Index argmin = 0;
        if (order == 0) {
            v.minCoeff(&argmin);
            v.array() -= v[argmin];
        } else {
            sample_raw(t).minCoeff(&argmin);
            v.array() -= v[argmin];
        }
        return v;
    }

    FourierSymbol symbol_;
    PotentialField potential_;
    bool shifted_ = false;
    Eigen::MatrixXd profiles_;
};

struct ShiftResult {
    SemiDiscreteSystem system;
    std::vector<double> gamma;  ///< γ at every mesh time
};

/// Shifts the potential to be nonnegative on the grid and reports γ on `time_mesh`.
inline ShiftResult shift_potential(const SemiDiscreteSystem& system, const std::vector<double>& time_mesh) {
    if (time_mesh.empty()) throw InputError("shift_potential needs a nonempty time mesh");
    ShiftResult out{system.with_shift(true), {}};
    out.gamma.reserve(time_mesh.size());
    for (double t : time_mesh) {
        out.gamma.push_back(system.gamma(t));
        if (out.system.sample_C(t).minCoeff() < -1e-12) throw Error("shifted potential negative on the grid");
    }
    return out;
}

inline void check_reference_tol(double tol) {
    if (!(tol > 1e-14 && tol < 1e-4)) throw InputError("reference tolerance must lie in (1e-14, 1e-4)");
}

/// Reference solution of du/dt = -B u - C(t) u from 0 to T.
///
/// Lawson–Dormand–Prince in Fourier space: e^{-Bs} is applied exactly as a
/// multiplier and the potential term is integrated with embedded 5(4) error
/// control at `tol`. `observer(t, state)` sees the physical-space state after
/// each accepted step.
template <class Observer = NoObserver>
StateVector reference_solve(const SemiDiscreteSystem& system, const StateVector& u0, double T, double tol = 1e-10,
                            Observer&& observer = {}, OdeStats* stats = nullptr) {
    check_reference_tol(tol);
    if (!(u0.grid == system.grid())) throw InputError("initial state lives on a different grid");
    if (!(T >= 0.0)) throw DomainError("final time must be nonnegative");
    const UnitaryFFT fft(fft_shape(system.grid()));
    Eigen::VectorXcd u(u0.data.size());
    auto rhs = [&](double t, const Eigen::VectorXcd& yhat, Eigen::VectorXcd& out) {
        u = fft.to_physical(yhat);
        u.array() *= -system.sample_C(t).array();
        out = fft.to_frequency(u);
    };
    OdeOptions opts;
    opts.tol = tol;
    auto watch = [&](double t, const Eigen::VectorXcd& yhat) {
        if constexpr (!std::is_same_v<std::decay_t<Observer>, NoObserver>)
            observer(t, StateVector(system.grid(), fft.to_physical(yhat)));
    };
    Eigen::VectorXcd yhat = integrate_lawson(system.symbol().eigenvalues, rhs, fft.to_frequency(u0.data), 0.0, T,
                                             opts, watch, stats);
    return StateVector(system.grid(), fft.to_physical(std::move(yhat)));
}

/// Columns of the reference propagator Φ(T, 0) from reference_solve on each basis vector.
inline Eigen::MatrixXcd reference_propagator(const SemiDiscreteSystem& system, double T, double tol = 1e-12) {
    const std::size_t n = system.grid().size();
    if (n > kDenseGuard) throw SizeGuardError("dense propagator requested above N^d = 4096");
    Eigen::MatrixXcd U(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        StateVector e(system.grid());
        e.data[static_cast<Eigen::Index>(j)] = 1.0;
        U.col(static_cast<Eigen::Index>(j)) = reference_solve(system, e, T, tol).data;
    }
    return U;
}

/// Spectral norm of a small dense matrix (full SVD).
inline double operator_norm(const Eigen::MatrixXcd& A) {
    if (A.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(A).singularValues()[0];
}

/// Dense B built entrywise from its definition F^{⊗d} D (F^{-1})^{⊗d}.
///
/// B is circulant per axis: B_{jk} = N^{-d} Σ_m D_m ω^{(j-k)·m}, evaluated by a
/// direct DFT sum (no FFT), then filled per index difference.
inline Eigen::MatrixXd dense_B(const FourierSymbol& sym) {
    const Grid& g = sym.grid;
    const std::size_t n = g.size();
    if (n > kDenseGuard) throw SizeGuardError("dense operator requested above N^d = 4096");
    const auto N = static_cast<std::int64_t>(g.points_per_axis());
    const int d = g.dim();
    std::vector<MultiIndex> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = g.unflatten(i);

    Eigen::VectorXd column(static_cast<Eigen::Index>(n));  // b(δ) for every δ ∈ [N]^d
    for (std::size_t delta = 0; delta < n; ++delta) {
        std::complex<double> acc = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            std::int64_t phase = 0;
            for (int a = 0; a < d; ++a) phase += idx[delta][static_cast<std::size_t>(a)] * idx[m][static_cast<std::size_t>(a)];
            phase %= N;
            const double ang = 2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(N);
            acc += sym.eigenvalues[static_cast<Eigen::Index>(m)] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        column[static_cast<Eigen::Index>(delta)] = acc.real() / static_cast<double>(n);
    }
    Eigen::MatrixXd B(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    MultiIndex diff(static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            for (int a = 0; a < d; ++a) {
                const auto aa = static_cast<std::size_t>(a);
                diff[aa] = ((idx[j][aa] - idx[k][aa]) % N + N) % N;
            }
            B(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = column[static_cast<Eigen::Index>(g.flatten(diff))];
        }
    }
    return B;
}

/// Dense generator -B - C(t).
inline Eigen::MatrixXd dense_operator(const SemiDiscreteSystem& system, double t) {
    Eigen::MatrixXd A = -dense_B(system.symbol());
    A.diagonal() -= system.sample_C(t);
    return A;
}

/// ‖a/‖a‖ - b/‖b‖‖ for nonzero a, b.
inline double normalized_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw InputError("normalized distance needs nonzero vectors");
    return (a / na - b / nb).norm();
}

}  // namespace frakdiff
