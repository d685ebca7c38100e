#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <numbers>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "frakdiff/errors.hpp"
#include "frakdiff/fft.hpp"
#include "frakdiff/ode.hpp"
#include "frakdiff/problem.hpp"
#include "frakdiff/spectral.hpp"

namespace frakdiff {

/// Neumaier-compensated running sum.
template <class T>
struct CompensatedSum {
    T sum{};
    T carry{};

    void add(T x) {
        if constexpr (std::is_same_v<T, std::complex<double>>) {
            double re = sum.real(), ce = carry.real(), im = sum.imag(), ci = carry.imag();
            add_real(re, ce, x.real());
            add_real(im, ci, x.imag());
            sum = {re, im};
            carry = {ce, ci};
        } else {
            double s = sum, c = carry;
            add_real(s, c, x);
            sum = s;
            carry = c;
        }
    }
    T value() const { return sum + carry; }

private:
    static void add_real(double& s, double& c, double x) {
        const double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
};

/// Left Riemann rule for the Cauchy kernel 1/(π(1+ξ²)) on [-Ξ, Ξ).
///
/// Nodes ξ_j = -Ξ + 2jΞ/M and weights w_j = 2Ξ/(Mπ(1+ξ_j²)), j = 0..M-1, are
/// generated on demand so that M can exceed memory.
struct Quadrature {
    double Xi = 1.0;
    std::size_t M = 1;

    double spacing() const { return 2.0 * Xi / static_cast<double>(M); }
    double node(std::size_t j) const { return -Xi + 2.0 * Xi * static_cast<double>(j) / static_cast<double>(M); }
    double weight(std::size_t j) const {
        const double x = node(j);
        return spacing() / (std::numbers::pi * (1.0 + x * x));
    }

    std::vector<double> nodes() const {
        guard();
        std::vector<double> v(M);
        for (std::size_t j = 0; j < M; ++j) v[j] = node(j);
        return v;
    }
    std::vector<double> weights() const {
        guard();
        std::vector<double> v(M);
        for (std::size_t j = 0; j < M; ++j) v[j] = weight(j);
        return v;
    }
    double weight_sum() const {
        CompensatedSum<double> s;
        for (std::size_t j = 0; j < M; ++j) s.add(weight(j));
        return s.value();
    }

private:
    void guard() const {
        if (M > (std::size_t{1} << 27)) throw SizeGuardError("quadrature too large to materialise");
    }
};

inline Quadrature build_quadrature(double Xi, std::size_t M) {
    if (!(Xi > 0.0) || !std::isfinite(Xi)) throw InputError("quadrature radius must be positive");
    if (M < 1) throw InputError("quadrature needs at least one node");
    return {Xi, M};
}

/// Truncation plus discretisation bound 2/(πΞ) + 2Ξ²/(πM) (1 + T(‖B‖ + max‖C‖)).
inline double lchs_error_bound(double Xi, std::size_t M, double T, double normB, double maxC) {
    const double pi = std::numbers::pi;
    return 2.0 / (pi * Xi) + 2.0 * Xi * Xi / (pi * static_cast<double>(M)) * (1.0 + T * (normB + maxC));
}

struct LchsParameters {
    double Xi = 0.0;
    std::size_t M = 0;
    double eps_prime = 0.0;  ///< operator-level target ε/(2 g(T))
    double bound = 0.0;      ///< lchs_error_bound at (Ξ, M)
};

/// Ξ = ⌈3/(πε′)⌉ spends two thirds of ε′ on the tail, M = ⌈(6/π)Ξ²K/ε′⌉ with
/// K = 1 + T(‖B‖ + max‖C‖) the remaining third.
inline LchsParameters choose_parameters(double epsilon, double T, double normB, double maxC, double gT) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw PreconditionError("epsilon must lie in (0,1)");
    if (!(gT > 0.0) || !(T >= 0.0) || !(normB >= 0.0) || !(maxC >= 0.0))
        throw PreconditionError("need g(T) > 0 and nonnegative T, norms");
    const double a = 2.0 / std::numbers::pi;
    LchsParameters p;
    p.eps_prime = epsilon / (2.0 * gT);
    p.Xi = std::ceil(1.5 * a / p.eps_prime);
    const double K = 1.0 + T * (normB + maxC);
    const double m = std::ceil(3.0 * a * K * p.Xi * p.Xi / p.eps_prime);
    if (!(m < 1e18)) throw SizeGuardError("quadrature node count overflows");
    p.M = static_cast<std::size_t>(m);
    p.bound = lchs_error_bound(p.Xi, p.M, T, normB, maxC);
    if (p.bound > p.eps_prime) throw Error("LCHS parameter choice violates its own bound");
    return p;
}

namespace detail {

// 16-point Gauss–Legendre rule on [-1, 1] by Newton iteration on P_16.
inline const std::array<std::pair<double, double>, 16>& gauss_legendre16() {
    static const auto rule = [] {
        constexpr int n = 16;
        std::array<std::pair<double, double>, n> r{};
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            r[static_cast<std::size_t>(i)] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
        }
        return r;
    }();
    return rule;
}

// (2/π) ∫_0^Ξ cos(sξ)/(1+ξ²) dξ with composite Gauss–Legendre panels that resolve the oscillation.
inline double cauchy_cos_integral(double Xi, double s) {
    const double width = std::min(0.5, 1.0 / (std::abs(s) + 1.0));
    const auto panels = static_cast<std::size_t>(std::ceil(Xi / width));
    const double hw = 0.5 * Xi / static_cast<double>(panels);
    const auto& gl = gauss_legendre16();
    CompensatedSum<double> acc;
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = (2.0 * static_cast<double>(p) + 1.0) * hw;
        double panel = 0.0;
        for (const auto& [x, w] : gl) {
            const double xi = mid + hw * x;
            panel += w * std::cos(s * xi) / (1.0 + xi * xi);
        }
        acc.add(panel * hw);
    }
    return 2.0 / std::numbers::pi * acc.value();
}

}  // namespace detail

/// Σ_j w_j e^{-i ξ_j s} accumulated in ascending j with compensated summation.
///
/// The phase factor is advanced geometrically and re-anchored from the exact
/// exponential every 1024 nodes.
inline std::complex<double> phase_sum_direct(const Quadrature& q, double s) {
    const double dx = q.spacing();
    const std::complex<double> ratio = std::polar(1.0, -s * dx);
    CompensatedSum<std::complex<double>> acc;
    std::complex<double> phase;
    for (std::size_t j = 0; j < q.M; ++j) {
        if (j % 1024 == 0) phase = std::polar(1.0, -s * q.node(j));
        acc.add(q.weight(j) * phase);
        phase *= ratio;
    }
    return acc.value();
}

/// Σ_j w_j e^{-i ξ_j s} for any M.
///
/// Large rules whose spacing resolves the phase (Δ|s| ≤ 1e-3) are summed through
/// the Euler–Maclaurin expansion of the left Riemann sum of
/// g(ξ) = e^{-isξ}/(π(1+ξ²)):
///     ∫ g + (Δ/2)(g(-Ξ) - g(Ξ)) + (Δ²/12)(g′(Ξ) - g′(-Ξ)) + O(Δ⁴ g‴),
/// where the integral is evaluated by Gauss–Legendre. The omitted term is below
/// double precision in that regime. Everything else is summed directly.
inline std::complex<double> phase_sum(const Quadrature& q, double s) {
    const double dx = q.spacing();
    if (q.M <= (std::size_t{1} << 22) || dx * std::abs(s) > 1e-3) return phase_sum_direct(q, s);
    const double Xi = q.Xi;
    const std::complex<double> I(0.0, 1.0);
    auto g = [&](double x) { return std::polar(1.0, -s * x) / (std::numbers::pi * (1.0 + x * x)); };
    auto dg = [&](double x) { return g(x) * (-I * s - 2.0 * x / (1.0 + x * x)); };
    const double integral = detail::cauchy_cos_integral(Xi, s);
    return integral + 0.5 * dx * (g(-Xi) - g(Xi)) + dx * dx / 12.0 * (dg(Xi) - dg(-Xi));
}

/// v_I(T) for one node ξ.
struct IPState {
    double xi = 0.0;
    StateVector vector;
};

namespace detail {

// Integrates ŵ′ = -iξ P(t) F⁻¹ C(t) F P(t)⁻¹ ŵ with P(t) = e^{iξDt}, the Fourier-space
// form of v_I′ = -i H_I v_I. Returns ŵ(T).
inline Eigen::VectorXcd ip_propagate_frequency(double xi, const SemiDiscreteSystem& system, Eigen::VectorXcd what,
                                               double T, double tol, const UnitaryFFT& fft) {
    if (xi == 0.0 || T == 0.0) return what;
    const Eigen::ArrayXd& lam = system.symbol().eigenvalues.array();
    Eigen::VectorXcd x(what.size());
    auto rhs = [&](double t, const Eigen::VectorXcd& w, Eigen::VectorXcd& out) {
        const Eigen::ArrayXcd rot = (std::complex<double>(0.0, xi * t) * lam.cast<std::complex<double>>()).exp();
        x = (w.array() / rot).matrix();
        fft.to_physical_inplace(x);
        x.array() *= system.sample_C(t).array();
        fft.to_frequency_inplace(x);
        out = (std::complex<double>(0.0, -xi) * x.array() * rot).matrix();
    };
    OdeOptions opts;
    opts.tol = tol;
    return integrate_lawson(Eigen::VectorXd(), rhs, std::move(what), 0.0, T, opts);
}

}  // namespace detail

/// Interaction-picture propagation: v_I′ = -i e^{iξBt} ξC(t) e^{-iξBt} v_I, v_I(0) = u0.
///
/// The conjugations are exact Fourier phases; the remaining ODE is integrated with
/// adaptive Dormand–Prince at `tol`.
inline IPState ip_propagate(double xi, const SemiDiscreteSystem& system, const StateVector& u0, double T,
                            double tol = 1e-10) {
    check_reference_tol(tol);
    if (!(u0.grid == system.grid())) throw InputError("state and system live on different grids");
    if (!(T >= 0.0)) throw DomainError("final time must be nonnegative");
    const UnitaryFFT fft(fft_shape(system.grid()));
    try {
        Eigen::VectorXcd w = detail::ip_propagate_frequency(xi, system, fft.to_frequency(u0.data), T, tol, fft);
        return {xi, StateVector(system.grid(), fft.to_physical(std::move(w)))};
    } catch (const StiffnessError& e) {
        throw StiffnessError(std::string("interaction-picture node xi=") + std::to_string(xi) + ": " + e.what(),
                             e.time(), e.step());
    }
}

enum class LchsStrategy {
    InteractionPicture,  ///< one interaction-picture solve per node
    Spectral,            ///< time-independent C: eigendecompose B + C once, sum phases per eigenvalue
};

struct LchsOptions {
    double tol = 1e-10;
    LchsStrategy strategy = LchsStrategy::InteractionPicture;
    unsigned threads = 1;
};

/// Σ_j w_j e^{-iξ_j B T} v_I(T; ξ_j).
///
/// Node contributions are reduced in ascending j with compensated summation, so the
/// result does not depend on `threads`.
inline StateVector lchs_solve(const StateVector& u0, const SemiDiscreteSystem& system, double T,
                              const Quadrature& q, const LchsOptions& opt = {}) {
    check_reference_tol(opt.tol);
    if (!(u0.grid == system.grid())) throw InputError("state and system live on different grids");
    if (q.M < 1 || !(q.Xi > 0.0)) throw InputError("invalid quadrature");
    const auto n = u0.data.size();

    if (opt.strategy == LchsStrategy::Spectral) {
        if (!system.time_independent()) throw UnsupportedError("spectral LCHS needs a time-independent potential");
        Eigen::MatrixXd H = dense_B(system.symbol());
        H.diagonal() += system.sample_C(0.0);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
        if (eig.info() != Eigen::Success) throw Error("eigendecomposition of B + C failed");
        const Eigen::MatrixXcd V = eig.eigenvectors().cast<std::complex<double>>();
        Eigen::VectorXcd coeff = V.adjoint() * u0.data;
        for (Eigen::Index k = 0; k < n; ++k) coeff[k] *= phase_sum(q, eig.eigenvalues()[k] * T);
        return StateVector(u0.grid, V * coeff);
    }

    const UnitaryFFT fft(fft_shape(system.grid()));
    const Eigen::VectorXcd u0hat = fft.to_frequency(u0.data);
    const Eigen::ArrayXcd lam = system.symbol().eigenvalues.array().cast<std::complex<double>>();
    std::vector<CompensatedSum<std::complex<double>>> acc(static_cast<std::size_t>(n));

    auto node_term = [&](std::size_t j) -> Eigen::VectorXcd {
        const double xi = q.node(j);
        Eigen::VectorXcd w;
        try {
            w = detail::ip_propagate_frequency(xi, system, u0hat, T, opt.tol, fft);
        } catch (const StiffnessError& e) {
            throw StiffnessError("LCHS node " + std::to_string(j) + ": " + e.what(), e.time(), e.step());
        }
        w.array() *= (std::complex<double>(0.0, -xi * T) * lam).exp();
        return q.weight(j) * w;
    };

    const unsigned threads = std::max(1u, opt.threads);
    const std::size_t chunk = threads * 8;
    std::vector<Eigen::VectorXcd> terms(chunk);
    for (std::size_t start = 0; start < q.M; start += chunk) {
        const std::size_t stop = std::min(q.M, start + chunk);
        if (threads == 1) {
            for (std::size_t j = start; j < stop; ++j) terms[j - start] = node_term(j);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(threads);
            for (unsigned w = 0; w < threads; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t j = start + w; j < stop; j += threads) terms[j - start] = node_term(j);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& t : pool) t.join();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
        }
        for (std::size_t j = start; j < stop; ++j)
            for (Eigen::Index i = 0; i < n; ++i) acc[static_cast<std::size_t>(i)].add(terms[j - start][i]);
    }
    Eigen::VectorXcd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = acc[static_cast<std::size_t>(i)].value();
    return StateVector(u0.grid, fft.to_physical(std::move(out)));
}

/// ‖u0‖ / ‖u(T)‖ from a coarse reference solve; a stand-in for a caller-supplied g(T).
inline double estimate_gT(const SemiDiscreteSystem& system, const StateVector& u0, double T, double tol = 1e-8) {
    const double out = reference_solve(system, u0, T, tol).norm();
    if (!(out > 0.0)) throw DomainError("solution vanishes at T; g(T) is unbounded");
    return u0.norm() / out;
}

}  // namespace frakdiff
