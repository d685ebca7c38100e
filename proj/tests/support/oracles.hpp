// Independent reference computations used only by the tests.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "frakdiff/frakdiff.hpp"

namespace ref {

using cplx = std::complex<double>;

/// Unitary DFT matrix with entries N^{-1/2} e^{2πi jk/N} (the physical-from-frequency map).
inline Eigen::MatrixXcd dft_matrix(int N) {
    Eigen::MatrixXcd F(N, N);
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k)
            F(j, k) = std::polar(1.0 / std::sqrt(double(N)), 2.0 * std::numbers::pi * double((j * k) % N) / N);
    return F;
}

/// d = 1 dense B = F diag((2π|i(k)|)^α) F⁻¹ from explicit matrices.
inline Eigen::MatrixXd dense_B_1d(int N, double alpha) {
    const Eigen::MatrixXcd F = dft_matrix(N);
    Eigen::VectorXcd D(N);
    for (int k = 0; k < N; ++k) {
        const int f = (2 * k <= N) ? k : k - N;
        D[k] = f == 0 ? 0.0 : std::pow(2.0 * std::numbers::pi * std::abs(f), alpha);
    }
    const Eigen::MatrixXcd B = F * D.asDiagonal() * F.adjoint();
    return B.real();
}

inline Eigen::MatrixXcd expm(const Eigen::MatrixXcd& A) { return A.exp(); }
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& A) { return A.exp(); }

/// Time-ordered propagator of U′ = A(t) U on [0, T] by the fourth-order commutator-free
/// Magnus integrator with `steps` uniform steps.
inline Eigen::MatrixXcd propagator(const std::function<Eigen::MatrixXcd(double)>& A, double T, int steps) {
    const Eigen::Index n = A(0.0).rows();
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Identity(n, n);
    const double h = T / steps;
    const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
    const double a1 = 0.25 + std::sqrt(3.0) / 6.0, a2 = 0.25 - std::sqrt(3.0) / 6.0;
    for (int s = 0; s < steps; ++s) {
        const double t = s * h;
        const Eigen::MatrixXcd A1 = A(t + c1 * h), A2 = A(t + c2 * h);
        U = (h * (a2 * A1 + a1 * A2)).exp() * (h * (a1 * A1 + a2 * A2)).exp() * U;
    }
    return U;
}

/// u′ = μu - a u² with μ = a - c0, exact.
inline double logistic(double u0, double a, double c0, double t) {
    const double mu = a - c0;
    if (mu == 0.0) return u0 / (1.0 + a * u0 * t);
    const double e = std::exp(mu * t);
    return mu * u0 * e / (mu + a * u0 * (e - 1.0));
}

/// Seeded smooth potential: a few low modes with sinusoidal and polynomial time coefficients.
inline frakdiff::PotentialField random_potential(std::mt19937_64& rng, int d, int modes = 3, bool time_dependent = true) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_int_distribution<int> K(-2, 2);
    frakdiff::PotentialField p;
    p.offset = frakdiff::ConstantFn{1.0 + 0.5 * U(rng)};
    for (int m = 0; m < modes; ++m) {
        frakdiff::PotentialMode mode;
        mode.k.resize(d);
        for (auto& k : mode.k) k = K(rng);
        if (std::all_of(mode.k.begin(), mode.k.end(), [](auto k) { return k == 0; })) mode.k[0] = 1;
        mode.basis = (m % 2 == 0) ? frakdiff::ModeBasis::Cos : frakdiff::ModeBasis::Sin;
        if (time_dependent && m % 2 == 0)
            mode.coefficient = frakdiff::SinusoidFn{0.5 * U(rng), 2.0 + U(rng), U(rng), 0.5 * U(rng)};
        else if (time_dependent)
            mode.coefficient = frakdiff::PolynomialFn{{0.5 * U(rng), 0.5 * U(rng), 0.25 * U(rng)}};
        else
            mode.coefficient = frakdiff::ConstantFn{0.6 * U(rng)};
        p.modes.push_back(mode);
    }
    return p;
}

/// Random smooth initial state: a few Fourier modes plus a constant.
inline frakdiff::StateVector random_smooth_state(std::mt19937_64& rng, const frakdiff::Grid& g) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> amp(4), ph(4);
    for (int i = 0; i < 4; ++i) {
        amp[i] = U(rng);
        ph[i] = 3.0 * U(rng);
    }
    return frakdiff::sample(g, [&](std::span<const double> x) {
        double s = 0.0;
        for (double xi : x) s += xi;
        double v = 1.0;
        for (int k = 1; k <= 4; ++k) v += amp[k - 1] / (k * k) * std::cos(2.0 * std::numbers::pi * k * s + ph[k - 1]);
        return cplx(v, 0.0);
    });
}

inline Eigen::VectorXcd random_vector(std::mt19937_64& rng, Eigen::Index n, bool real = false) {
    std::normal_distribution<double> G;
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(G(rng), real ? 0.0 : G(rng));
    return v;
}

}  // namespace ref
