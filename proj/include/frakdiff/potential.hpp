#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "frakdiff/errors.hpp"
#include "frakdiff/grid.hpp"

namespace frakdiff {

struct ConstantFn {
    double value = 0.0;
};

/// Σ_k coeffs[k] t^k.
struct PolynomialFn {
    std::vector<double> coeffs;
};

/// amplitude · sin(omega t + phase) + shift.
struct SinusoidFn {
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
    double shift = 0.0;
};

/// Time coefficient with closed-form first and second derivatives.
using TimeFunction = std::variant<ConstantFn, PolynomialFn, SinusoidFn>;

/// Value of the `order`-th time derivative (order ∈ {0,1,2}).
inline double evaluate(const TimeFunction& f, double t, int order = 0) {
    if (order < 0 || order > 2) throw InputError("only derivatives of order 0..2 are available");
    return std::visit(
        [&](const auto& fn) -> double {
            using F = std::decay_t<decltype(fn)>;
            if constexpr (std::is_same_v<F, ConstantFn>) {
                return order == 0 ? fn.value : 0.0;
            } else if constexpr (std::is_same_v<F, PolynomialFn>) {
                double acc = 0.0;
                for (std::size_t k = fn.coeffs.size(); k-- > 0;) {
                    if (static_cast<int>(k) < order) break;
                    double falling = 1.0;
                    for (int j = 0; j < order; ++j) falling *= static_cast<double>(k) - j;
                    acc = acc * t + fn.coeffs[k] * falling;
                }
                return acc;
            } else {
                const double arg = fn.omega * t + fn.phase;
                switch (order) {
                    case 0: return fn.amplitude * std::sin(arg) + fn.shift;
                    case 1: return fn.amplitude * fn.omega * std::cos(arg);
                    default: return -fn.amplitude * fn.omega * fn.omega * std::sin(arg);
                }
            }
        },
        f);
}

inline bool is_time_independent(const TimeFunction& f) {
    return std::visit(
        [](const auto& fn) {
            using F = std::decay_t<decltype(fn)>;
            if constexpr (std::is_same_v<F, ConstantFn>) {
                return true;
            } else if constexpr (std::is_same_v<F, PolynomialFn>) {
                for (std::size_t k = 1; k < fn.coeffs.size(); ++k)
                    if (fn.coeffs[k] != 0.0) return false;
                return true;
            } else {
                return fn.amplitude == 0.0 || fn.omega == 0.0;
            }
        },
        f);
}

enum class ModeBasis { Cos, Sin };

/// One term coefficient(t) · cos/sin(2π k·x).
struct PotentialMode {
    MultiIndex k;
    ModeBasis basis = ModeBasis::Cos;
    TimeFunction coefficient = ConstantFn{0.0};
};

/// Real potential c(t,x) = offset(t) + Σ_m coef_m(t) · cos/sin(2π k_m·x).
///
/// A finite Fourier sum is C^∞ in x, so every spatial smoothness hypothesis holds,
/// and all time derivatives are exact.
struct PotentialField {
    std::vector<PotentialMode> modes;
    TimeFunction offset = ConstantFn{0.0};

    static PotentialField zero() { return {}; }

    bool time_independent() const {
        if (!is_time_independent(offset)) return false;
        for (const auto& m : modes)
            if (!is_time_independent(m.coefficient)) return false;
        return true;
    }

    /// Spatial profile cos/sin(2π k·x) of mode `m` at x.
    static double profile(const PotentialMode& m, std::span<const double> x) {
        if (m.k.size() != x.size()) throw InputError("potential mode dimension does not match the grid");
        double phase = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) phase += static_cast<double>(m.k[a]) * x[a];
        phase *= 2.0 * std::numbers::pi;
        return m.basis == ModeBasis::Cos ? std::cos(phase) : std::sin(phase);
    }

    /// ∂_t^order c(t,x).
    double value(double t, std::span<const double> x, int order = 0) const {
        double v = evaluate(offset, t, order);
        for (const auto& m : modes) v += evaluate(m.coefficient, t, order) * profile(m, x);
        return v;
    }
};

}  // namespace frakdiff
