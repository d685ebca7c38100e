#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "frakdiff/errors.hpp"
#include "frakdiff/fft.hpp"
#include "frakdiff/grid.hpp"

namespace frakdiff {

/// Grid samples of a (possibly complex) field; the classical stand-in for |u>.
struct StateVector {
    Grid grid;
    Eigen::VectorXcd data;

    explicit StateVector(const Grid& g) : grid(g), data(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(g.size()))) {}
    StateVector(const Grid& g, Eigen::VectorXcd values) : grid(g), data(std::move(values)) {
        if (static_cast<std::size_t>(data.size()) != grid.size()) throw InputError("state length must equal N^d");
    }

    double norm() const { return data.norm(); }
};

/// Samples f(x) at every grid node x = n/N.
inline StateVector sample(const Grid& grid, const std::function<std::complex<double>(std::span<const double>)>& f) {
    StateVector s(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto x = grid.coordinates(i);
        s.data[static_cast<Eigen::Index>(i)] = f(x);
    }
    return s;
}

inline std::vector<int> fft_shape(const Grid& grid, int copies = 1) {
    return std::vector<int>(static_cast<std::size_t>(grid.dim() * copies),
                            static_cast<int>(grid.points_per_axis()));
}

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigurationError("fractional order alpha must lie in (0, 2]");
}

/// (2π‖k‖₂)^α, exactly 0 at k = 0.
inline double symbol_value(double alpha, std::span<const std::int64_t> k) {
    check_alpha(alpha);
    double sq = 0.0;
    for (auto c : k) sq += static_cast<double>(c) * static_cast<double>(c);
    if (sq == 0.0) return 0.0;
    return std::pow(2.0 * std::numbers::pi * std::sqrt(sq), alpha);
}

/// Diagonal of D: the eigenvalues of the discrete fractional Laplacian B in
/// flat frequency order, entry m holding (2π‖i(m)‖)^α.
struct FourierSymbol {
    Grid grid;
    double alpha = 0.0;
    Eigen::VectorXd eigenvalues;

    double max_eigenvalue() const { return eigenvalues.size() ? eigenvalues.maxCoeff() : 0.0; }
};

inline FourierSymbol make_symbol(const Grid& grid, double alpha) {
    check_alpha(alpha);
    FourierSymbol sym{grid, alpha, Eigen::VectorXd(static_cast<Eigen::Index>(grid.size()))};
    for (std::size_t m = 0; m < grid.size(); ++m) {
        const auto folded = fold_index(grid.unflatten(m), grid.points_per_axis());
        sym.eigenvalues[static_cast<Eigen::Index>(m)] = symbol_value(alpha, folded);
    }
    return sym;
}

/// Symbol with every eigenvalue zero (B removed from the dynamics).
inline FourierSymbol zero_symbol(const Grid& grid, double alpha = 1.0) {
    return FourierSymbol{grid, alpha, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()))};
}

/// Applies the Fourier multiplier `multiplier` (length N^d) to `v` in place.
inline void apply_multiplier(const Grid& grid, const Eigen::VectorXcd& multiplier, Eigen::VectorXcd& v) {
    const UnitaryFFT fft(fft_shape(grid));
    fft.to_frequency_inplace(v);
    v.array() *= multiplier.array();
    fft.to_physical_inplace(v);
}

inline void check_same_grid(const StateVector& s, const FourierSymbol& sym) {
    if (!(s.grid == sym.grid)) throw InputError("state and symbol live on different grids");
}

/// B v = F^{⊗d} D (F^{-1})^{⊗d} v.
inline StateVector apply_B(const StateVector& state, const FourierSymbol& sym) {
    check_same_grid(state, sym);
    StateVector out = state;
    apply_multiplier(state.grid, sym.eigenvalues.cast<std::complex<double>>(), out.data);
    return out;
}

struct HeatResult {
    StateVector state;
    /// ‖u(t)‖ / ‖u_0‖; the success amplitude of the post-selected circuit (0 for a zero input).
    double amplitude = 0.0;
};

/// e^{-Bt} u: every Fourier coefficient scaled by e^{-λ_k t}.
///
/// Backward evolution (t < 0) is rejected: the fractional heat flow is
/// ill-posed backward in time, e^{+λ_k |t|} amplifies high frequencies without bound.
inline HeatResult heat_propagate(const StateVector& state, const FourierSymbol& sym, double t) {
    check_same_grid(state, sym);
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("heat_propagate requires a finite time t >= 0");
    StateVector out = state;
    const Eigen::VectorXcd decay = (-t * sym.eigenvalues.array()).exp().cast<std::complex<double>>().matrix();
    apply_multiplier(state.grid, decay, out.data);
    const double in_norm = state.norm();
    const double amp = in_norm > 0.0 ? out.norm() / in_norm : 0.0;
    return {std::move(out), amp};
}

struct SpatialErrorInputs {
    int p = 0;              ///< smoothness order
    double deriv_norm = 0;  ///< bound on max_{t,j} ‖∂_{x_j}^p u‖_{L¹}
    double T = 0;
    double sigma = 0;
    double Lambda = 1;
};

/// Spatial discretisation error bound T 2^{p+1} d^{α/2} ‖∂^p u‖ / (π^{p-α} N^{p-d-α}).
inline double spatial_error_bound(const SpatialErrorInputs& in, const Grid& grid, double alpha) {
    check_alpha(alpha);
    const double d = grid.dim();
    if (static_cast<double>(in.p) < d + alpha + 2.0)
        throw PreconditionError("spatial error bound requires p >= d + alpha + 2");
    if (in.deriv_norm < 0.0 || in.T < 0.0) throw InputError("derivative norm and T must be nonnegative");
    if (in.deriv_norm == 0.0 || in.T == 0.0) return 0.0;
    const double p = in.p;
    const double N = static_cast<double>(grid.points_per_axis());
    // log-space keeps 2^{p+1} and N^{p-d-α} finite for large p
    const double log_bound = std::log(in.T) + (p + 1.0) * std::log(2.0) + 0.5 * alpha * std::log(d) +
                             std::log(in.deriv_norm) - (p - alpha) * std::log(std::numbers::pi) -
                             (p - d - alpha) * std::log(N);
    return std::exp(log_bound);
}

/// Constants c_1..c_4 of the Gevrey-class spatial error estimate
/// ‖u(T) - u⃗(T)‖ ≤ c_1 T (c_2 d)^{c_3 d} d^{α/2} exp(-c_4 N^{1/σ}); requires σ > 0.
struct GevreyConstants {
    double c1, c2, c3, c4;
};

inline GevreyConstants gevrey_constants(double alpha, double sigma, double Lambda) {
    if (!(sigma > 0.0)) throw PreconditionError("Gevrey constants need sigma > 0");
    if (!(Lambda > 0.0)) throw PreconditionError("Gevrey constants need Lambda > 0");
    const double pi = std::numbers::pi;
    GevreyConstants c{};
    c.c1 = std::pow(2.0, 1.5 + sigma) * std::pow(pi, alpha + sigma / 2.0 + 0.5) * std::sqrt(Lambda);
    c.c2 = std::max(2.0 * (2.0 + alpha + 1.0 / sigma) * std::pow(2.0 * Lambda / pi, 1.0 / sigma), 1.0);
    c.c3 = sigma * (3.0 + alpha);
    c.c4 = 0.5 * sigma * std::pow(pi / (2.0 * Lambda), 1.0 / sigma);
    return c;
}

inline std::size_t next_power_of_two(double x) {
    std::size_t n = 2;
    while (static_cast<double>(n) < x) {
        if (n > (std::size_t{1} << 40)) throw SizeGuardError("requested grid size is not representable");
        n <<= 1;
    }
    return n;
}

/// Smallest power-of-two N keeping the normalised spatial error of a G^σ solution below ε.
///
/// Solves 2 c_1 T/g̃ (c_2 d)^{c_3 d} d^{α/2} exp(-c_4 N^{1/σ}) ≤ ε for N, i.e.
/// N ≥ (c_4^{-1} [ln(2c_1) + ln(T/g̃) + ln(1/ε) + c_3 d ln(c_2 d) + (α/2) ln d])^σ,
/// and enforces the validity floor N ≥ (2Λ/π)(d+α+2)^σ. σ = 0 returns the floor.
inline std::size_t gevrey_grid_size(int d, double alpha, double T, double g_tilde, double epsilon, double sigma,
                                    double Lambda) {
    check_alpha(alpha);
    if (d < 1) throw PreconditionError("dimension must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw PreconditionError("epsilon must lie in (0,1)");
    if (!(g_tilde > 0.0)) throw PreconditionError("g_tilde must be positive");
    if (!(T > 0.0)) throw PreconditionError("T must be positive");
    if (!(sigma >= 0.0) || !(Lambda > 0.0)) throw PreconditionError("need sigma >= 0 and Lambda > 0");
    const double dd = d;
    const double floor_n = (2.0 * Lambda / std::numbers::pi) * std::pow(dd + alpha + 2.0, sigma);
    if (sigma == 0.0) return next_power_of_two(floor_n);
    const auto c = gevrey_constants(alpha, sigma, Lambda);
    const double bracket = std::log(2.0 * c.c1) + std::log(T / g_tilde) + std::log(1.0 / epsilon) +
                           c.c3 * dd * std::log(c.c2 * dd) + 0.5 * alpha * std::log(dd);
    const double needed = bracket > 0.0 ? std::pow(bracket / c.c4, sigma) : 0.0;
    return next_power_of_two(std::max(needed, floor_n));
}

}  // namespace frakdiff
