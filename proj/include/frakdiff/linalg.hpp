#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "frakdiff/errors.hpp"

namespace frakdiff {

struct NormEstimate {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest singular value of A by power iteration on AᵀA from a seeded random start.
///
/// The estimate is the Rayleigh quotient ‖Av‖ for unit v. Iteration stops once the
/// eigen-residual ‖AᵀAv - θv‖ falls below `rel_tol`·θ, which pins θ = ‖Av‖² to an
/// eigenvalue of AᵀA within that relative tolerance.
inline NormEstimate spectral_norm(const Eigen::MatrixXd& A, std::uint64_t seed = 0x5eed, double rel_tol = 1e-6,
                                  int max_iter = 500) {
    if (A.size() == 0) return {0.0, 0, true};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd v(A.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    v.normalize();

    NormEstimate est;
    for (int it = 1; it <= max_iter; ++it) {
        const Eigen::VectorXd Av = A * v;
        const Eigen::VectorXd w = A.transpose() * Av;
        const double theta = Av.squaredNorm();
        est.iterations = it;
        est.value = std::sqrt(theta);
        if (theta == 0.0) {
            est.converged = w.norm() == 0.0;
            if (est.converged) return est;
        } else if ((w - theta * v).norm() <= rel_tol * theta) {
            est.converged = true;
            return est;
        }
        const double wn = w.norm();
        if (wn == 0.0) return est;
        v = w / wn;
    }
    return est;
}

}  // namespace frakdiff
