#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

#include <Eigen/Dense>

#include "frakdiff/errors.hpp"

namespace frakdiff {

struct OdeOptions {
    double tol = 1e-10;               ///< local error tolerance (absolute and relative)
    double initial_step = 0.0;        ///< 0 selects a step from the initial data
    double max_step = 0.0;            ///< 0 means unbounded
    std::size_t max_steps = 50'000'000;
};

struct OdeStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
};

/// Observer that ignores the trajectory.
struct NoObserver {
    void operator()(double, const Eigen::VectorXcd&) const {}
};

namespace detail {

// Dormand–Prince 5(4) tableau.
struct DormandPrince {
    static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr std::array<std::array<double, 6>, 7> a{{
        {0, 0, 0, 0, 0, 0},
        {1.0 / 5, 0, 0, 0, 0, 0},
        {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
        {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
        {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
    }};
    static constexpr std::array<double, 7> b{35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0};
    static constexpr std::array<double, 7> b_hat{5179.0 / 57600, 0,           7571.0 / 16695, 393.0 / 640,
                                                 -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
};

inline double scaled_rms(const Eigen::VectorXcd& err, const Eigen::VectorXcd& y0, const Eigen::VectorXcd& y1,
                         double tol) {
    if (err.size() == 0) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = tol + tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = std::abs(err[i]) / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace detail

/// Adaptive Lawson (integrating-factor) Dormand–Prince 5(4) integrator for
///
///     y' = -Λ y + f(t, y),   Λ = diag(rates) ≥ 0,
///
/// where the linear part is propagated exactly by e^{-Λs}. With an empty `rates`
/// vector it is the plain explicit Dormand–Prince method. Every stage uses only
/// e^{-Λs} with s ≥ 0 because the nodes c_i are nondecreasing, so no factor ever
/// amplifies. `rhs(t, y, out)` writes f(t, y) into `out`; `observer(t, y)` is called
/// at t0 and after every accepted step.
template <class Rhs, class Observer = NoObserver>
Eigen::VectorXcd integrate_lawson(const Eigen::VectorXd& rates, Rhs&& rhs, Eigen::VectorXcd y, double t0, double t1,
                                  const OdeOptions& opts, Observer&& observer = {}, OdeStats* stats = nullptr) {
    using DP = detail::DormandPrince;
    const Eigen::Index n = y.size();
    const bool has_linear = rates.size() != 0;
    if (has_linear && rates.size() != n) throw InputError("rate vector length does not match the state");
    if (!(t1 >= t0)) throw DomainError("integration interval must satisfy t1 >= t0");
    if (!(opts.tol > 0.0)) throw InputError("integrator tolerance must be positive");

    OdeStats local;
    OdeStats& st = stats ? *stats : local;

    auto decay = [&](double s, const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
        if (!has_linear || s == 0.0) return v;
        return (v.array() * (-s * rates.array()).exp().cast<std::complex<double>>()).matrix();
    };

    std::array<Eigen::VectorXcd, 7> k;
    for (auto& ki : k) ki.resize(n);

    double t = t0;
    observer(t, y);
    if (t1 == t0) return y;

    rhs(t, y, k[0]);
    ++st.rhs_evaluations;

    const double span = t1 - t0;
    double h = opts.initial_step;
    if (h <= 0.0) {
        const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(n);
        const double d0 = detail::scaled_rms(y, zero, zero, opts.tol) * opts.tol;
        const double d1 = detail::scaled_rms(k[0], zero, zero, opts.tol) * opts.tol;
        h = (d0 > 1e-5 && d1 > 1e-5) ? 0.01 * d0 / d1 : 1e-3 * span;
        if (has_linear && rates.maxCoeff() > 0.0) h = std::min(h, 1.0 / rates.maxCoeff() + 1e-3 * span);
    }
    if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
    h = std::min(h, span);

    Eigen::VectorXcd stage(n), y_new(n), err(n);
    bool last_rejected = false;
    while (t < t1) {
        if (st.accepted + st.rejected >= opts.max_steps) throw StiffnessError("step budget exhausted", t, h);
        const bool last = t + h >= t1 || (t1 - (t + h)) < 1e-14 * std::max(1.0, std::abs(t1));
        if (last) h = t1 - t;

        for (int i = 1; i < 7; ++i) {
            stage = decay(DP::c[i] * h, y);
            for (int j = 0; j < i; ++j) {
                if (DP::a[i][j] == 0.0) continue;
                stage += (h * DP::a[i][j]) * decay((DP::c[i] - DP::c[j]) * h, k[j]);
            }
            if (i == 6) y_new = stage;
            rhs(t + DP::c[i] * h, stage, k[i]);
            ++st.rhs_evaluations;
        }
        err.setZero();
        for (int j = 0; j < 7; ++j) {
            const double e = DP::b[j] - DP::b_hat[j];
            if (e == 0.0) continue;
            err += (h * e) * decay((1.0 - DP::c[j]) * h, k[j]);
        }

        const double en = detail::scaled_rms(err, y, y_new, opts.tol);
        if (!std::isfinite(en)) throw StiffnessError("non-finite local error estimate", t, h);

        if (en <= 1.0) {
            t = last ? t1 : t + h;
            y = y_new;
            k[0] = k[6];
            ++st.accepted;
            observer(t, y);
            double fac = en == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(en, -0.2));
            if (last_rejected) fac = std::min(fac, 1.0);
            h *= fac;
            last_rejected = false;
        } else {
            ++st.rejected;
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            last_rejected = true;
        }
        if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
        if (t < t1 && h < 1e-14 * std::max(1.0, std::abs(t)))
            throw StiffnessError("step size underflow", t, h);
    }
    return y;
}

}  // namespace frakdiff
