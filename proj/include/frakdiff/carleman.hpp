#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frakdiff/errors.hpp"
#include "frakdiff/fft.hpp"
#include "frakdiff/ode.hpp"
#include "frakdiff/problem.hpp"
#include "frakdiff/spectral.hpp"

namespace frakdiff {

/// Default cap on n^M for Carleman solves.
inline constexpr std::size_t kCarlemanGuard = 100'000;

/// du/dt = F₁u + F₂(u⊗u) with F₁ = -B - C + aI and F₂(u⊗u) = -a u∘u.
class NonlinearSystem {
public:
    NonlinearSystem(SemiDiscreteSystem base, double a) : base_(std::move(base)), a_(a) {
        if (!base_.time_independent()) throw UnsupportedError("nonlinear systems need a time-independent potential");
        if (!std::isfinite(a_)) throw InputError("reaction coefficient must be finite");
    }

    const SemiDiscreteSystem& base() const noexcept { return base_; }
    double a() const noexcept { return a_; }
    std::size_t n() const { return base_.grid().size(); }
    Eigen::VectorXd potential() const { return base_.sample_C(0.0); }

private:
    SemiDiscreteSystem base_;
    double a_ = 0.0;
};

/// Dense F₁ (n × n) and F₂ (n × n², one entry -a per row at column (j-1)n + j).
struct FOperators {
    Eigen::MatrixXd F1;
    Eigen::MatrixXd F2;
    double a = 0.0;

    /// F₂ (u⊗u) without forming u⊗u.
    Eigen::VectorXcd apply_F2_square(const Eigen::VectorXcd& u) const { return -a * u.cwiseProduct(u); }
};

inline FOperators build_F(const NonlinearSystem& sys) {
    const auto n = static_cast<Eigen::Index>(sys.n());
    FOperators f;
    f.a = sys.a();
    f.F1 = -dense_B(sys.base().symbol());
    f.F1.diagonal() += (-sys.potential().array() + sys.a()).matrix();
    if (sys.n() * sys.n() <= kDenseGuard * 16) {
        f.F2 = Eigen::MatrixXd::Zero(n, n * n);
        for (Eigen::Index j = 0; j < n; ++j) f.F2(j, j * n + j) = -sys.a();
    }
    return f;
}

inline std::size_t int_pow(std::size_t n, int m) {
    std::size_t r = 1;
    for (int i = 0; i < m; ++i) {
        if (r > std::numeric_limits<std::size_t>::max() / std::max<std::size_t>(n, 1))
            throw SizeGuardError("tensor dimension overflows");
        r *= n;
    }
    return r;
}

namespace detail {

// out += (I_{n^axis} ⊗ F ⊗ I_{n^(m-axis-1)}) x for an m-fold tensor x, row-major.
inline void add_axis_action(const Eigen::MatrixXd& F, const std::complex<double>* x, std::complex<double>* out,
                            std::size_t n, int m, int axis) {
    const std::size_t L = int_pow(n, axis);
    const std::size_t R = int_pow(n, m - axis - 1);
    const Eigen::MatrixXcd Ft = F.transpose().cast<std::complex<double>>();
    const auto ni = static_cast<Eigen::Index>(n);
    const auto ri = static_cast<Eigen::Index>(R);
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::Map<const Eigen::MatrixXcd> X(x + l * n * R, ri, ni);
        Eigen::Map<Eigen::MatrixXcd> Y(out + l * n * R, ri, ni);
        Y.noalias() += X * Ft;
    }
}

// out[l, p, r] += -a x[l, p, p, r]: F₂ acting on tensor axes (axis, axis+1) of an (m+1)-fold x.
inline void add_diagonal_contraction(double a, const std::complex<double>* x, std::complex<double>* out, std::size_t n,
                                     int m, int axis) {
    const std::size_t L = int_pow(n, axis);
    const std::size_t R = int_pow(n, m - axis - 1);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t p = 0; p < n; ++p) {
            const std::complex<double>* src = x + ((l * n + p) * n + p) * R;
            std::complex<double>* dst = out + (l * n + p) * R;
            for (std::size_t r = 0; r < R; ++r) dst[r] -= a * src[r];
        }
}

inline Eigen::VectorXcd kron(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    Eigen::VectorXcd out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
    return out;
}

inline Eigen::VectorXcd kron_power(const Eigen::VectorXcd& u, int m) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Ones(1);
    for (int i = 0; i < m; ++i) out = kron(out, u);
    return out;
}

// Integrates y′ = f(y) from 0 to T, recording y at every requested time.
template <class Rhs>
Eigen::VectorXcd integrate_with_samples(Rhs&& rhs, Eigen::VectorXcd y, double T, double tol,
                                        const std::vector<double>& times, std::vector<Eigen::VectorXcd>* samples) {
    OdeOptions opts;
    opts.tol = tol;
    double t = 0.0;
    for (double s : times) {
        if (!(s >= t && s <= T)) throw InputError("output times must be sorted and lie in [0, T]");
        y = integrate_lawson(Eigen::VectorXd(), rhs, std::move(y), t, s, opts);
        if (samples) samples->push_back(y);
        t = s;
    }
    return integrate_lawson(Eigen::VectorXd(), rhs, std::move(y), t, T, opts);
}

}  // namespace detail

/// Truncated Carleman system on (w_1, …, w_M), w_m ∈ ℂ^{n^m}:
/// w_m′ = A_m^m w_m + A_{m+1}^m w_{m+1}, with A_{M+1}^M dropped.
/// A_m^m = Σ_j I⊗…⊗F₁⊗…⊗I and A_{m+1}^m = Σ_j I⊗…⊗F₂⊗…⊗I (j = 1..m), applied matrix-free.
class CarlemanSystem {
public:
    CarlemanSystem(const NonlinearSystem& sys, int M, std::size_t guard = kCarlemanGuard)
        : F_(build_F(sys)), n_(sys.n()), M_(M) {
        if (M < 1) throw InputError("Carleman order must be at least 1");
        if (int_pow(n_, M) > guard) throw SizeGuardError("Carleman dimension n^M exceeds the size guard");
        offsets_.push_back(0);
        for (int m = 1; m <= M; ++m) offsets_.push_back(offsets_.back() + int_pow(n_, m));
    }

    int order() const noexcept { return M_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t dimension() const { return offsets_.back(); }
    std::size_t offset(int m) const { return offsets_[static_cast<std::size_t>(m - 1)]; }
    std::size_t block_size(int m) const { return int_pow(n_, m); }
    const FOperators& F() const noexcept { return F_; }

    void apply(const Eigen::VectorXcd& w, Eigen::VectorXcd& out) const {
        out.setZero(w.size());
        for (int m = 1; m <= M_; ++m) {
            std::complex<double>* dst = out.data() + offset(m);
            for (int j = 0; j < m; ++j) detail::add_axis_action(F_.F1, w.data() + offset(m), dst, n_, m, j);
            if (m < M_ && F_.a != 0.0)
                for (int j = 0; j < m; ++j)
                    detail::add_diagonal_contraction(F_.a, w.data() + offset(m + 1), dst, n_, m, j);
        }
    }

    Eigen::VectorXcd initial(const Eigen::VectorXcd& u0) const {
        if (static_cast<std::size_t>(u0.size()) != n_) throw InputError("initial state has the wrong length");
        Eigen::VectorXcd w(static_cast<Eigen::Index>(dimension()));
        Eigen::VectorXcd p = u0;
        for (int m = 1; m <= M_; ++m) {
            w.segment(static_cast<Eigen::Index>(offset(m)), p.size()) = p;
            if (m < M_) p = detail::kron(p, u0);
        }
        return w;
    }

private:
    FOperators F_;
    std::size_t n_;
    int M_;
    std::vector<std::size_t> offsets_;
};

/// Dense Carleman matrix, for checking the matrix-free action on tiny systems.
inline Eigen::MatrixXd dense_carleman(const CarlemanSystem& cs) {
    const auto dim = static_cast<Eigen::Index>(cs.dimension());
    if (cs.dimension() > kDenseGuard) throw SizeGuardError("dense Carleman matrix above 4096 rows");
    if (cs.F().F2.size() == 0) throw SizeGuardError("dense F2 unavailable for this n");
    auto eye = [](std::size_t k) { return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)); };
    auto kron = [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
        Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            for (Eigen::Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
        return K;
    };
    const std::size_t n = cs.n();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    for (int m = 1; m <= cs.order(); ++m) {
        const auto r0 = static_cast<Eigen::Index>(cs.offset(m));
        for (int j = 0; j < m; ++j) {
            const Eigen::MatrixXd blk = kron(kron(eye(int_pow(n, j)), cs.F().F1), eye(int_pow(n, m - j - 1)));
            A.block(r0, r0, blk.rows(), blk.cols()) += blk;
        }
        if (m < cs.order()) {
            const auto c0 = static_cast<Eigen::Index>(cs.offset(m + 1));
            for (int j = 0; j < m; ++j) {
                const Eigen::MatrixXd blk = kron(kron(eye(int_pow(n, j)), cs.F().F2), eye(int_pow(n, m - j - 1)));
                A.block(r0, c0, blk.rows(), blk.cols()) += blk;
            }
        }
    }
    return A;
}

struct CarlemanResult {
    StateVector w1;
    Eigen::VectorXcd w;
    std::vector<Eigen::VectorXcd> samples;  ///< w at each requested output time
};

/// Integrates the truncated Carleman system from w_m(0) = u0^{⊗m}; w₁(T) approximates u(T).
inline CarlemanResult carleman_solve(const StateVector& u0, const NonlinearSystem& sys, int M, double T,
                                     double tol = 1e-10, const std::vector<double>& times = {}) {
    check_reference_tol(tol);
    if (!(u0.grid == sys.base().grid())) throw InputError("state and system live on different grids");
    const CarlemanSystem cs(sys, M);
    auto rhs = [&](double, const Eigen::VectorXcd& w, Eigen::VectorXcd& out) { cs.apply(w, out); };
    CarlemanResult res{StateVector(u0.grid), {}, {}};
    res.w = detail::integrate_with_samples(rhs, cs.initial(u0.data), T, tol, times, &res.samples);
    res.w1 = StateVector(u0.grid, res.w.head(static_cast<Eigen::Index>(sys.n())));
    return res;
}

/// Same-dimension form: blocks y_m ∈ ℂ^{n^M}, Ã_m^m = I^{⊗(M-m)} ⊗ A_m^m and Ã_{m+1}^m holding
/// A_{m+1}^m in its bottom-right corner.
class ExtendedCarlemanSystem {
public:
    ExtendedCarlemanSystem(const NonlinearSystem& sys, int M, std::size_t guard = kCarlemanGuard)
        : F_(build_F(sys)), n_(sys.n()), M_(M) {
        if (M < 1) throw InputError("Carleman order must be at least 1");
        if (int_pow(n_, M) > guard) throw SizeGuardError("Carleman dimension n^M exceeds the size guard");
        block_ = int_pow(n_, M);
    }

    int order() const noexcept { return M_; }
    std::size_t block_size() const noexcept { return block_; }
    std::size_t dimension() const { return block_ * static_cast<std::size_t>(M_); }

    void apply(const Eigen::VectorXcd& y, Eigen::VectorXcd& out) const {
        out.setZero(y.size());
        for (int m = 1; m <= M_; ++m) {
            const std::size_t base = static_cast<std::size_t>(m - 1) * block_;
            for (int j = 0; j < m; ++j)
                detail::add_axis_action(F_.F1, y.data() + base, out.data() + base, n_, M_, M_ - m + j);
            if (m < M_ && F_.a != 0.0) {
                const std::size_t next = base + block_;
                const std::size_t in_tail = int_pow(n_, m + 1);
                const std::size_t out_tail = int_pow(n_, m);
                for (int j = 0; j < m; ++j)
                    detail::add_diagonal_contraction(F_.a, y.data() + next + block_ - in_tail,
                                                     out.data() + base + block_ - out_tail, n_, m, j);
            }
        }
    }

private:
    FOperators F_;
    std::size_t n_;
    int M_;
    std::size_t block_ = 0;
};

/// y_m(0) = e_last^{⊗(M-m)} ⊗ u0^{⊗m}, e_last = (0, …, 0, 1); blocks stacked m = 1..M.
inline Eigen::VectorXcd extended_embed(const Eigen::VectorXcd& u0, int M, std::size_t guard = kCarlemanGuard) {
    if (M < 1) throw InputError("Carleman order must be at least 1");
    const auto n = static_cast<std::size_t>(u0.size());
    const std::size_t block = int_pow(n, M);
    if (block > guard) throw SizeGuardError("Carleman dimension n^M exceeds the size guard");
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(block * static_cast<std::size_t>(M)));
    Eigen::VectorXcd p = u0;
    for (int m = 1; m <= M; ++m) {
        // e_last^{⊗k} ⊗ v puts v in the trailing n^m slots.
        y.segment(static_cast<Eigen::Index>(static_cast<std::size_t>(m) * block) - p.size(), p.size()) = p;
        if (m < M) p = detail::kron(p, u0);
    }
    return y;
}

/// Trailing n^m entries of every y_m, concatenated; equals w when the structure holds.
inline Eigen::VectorXcd extended_trailing(const Eigen::VectorXcd& y, std::size_t n, int M) {
    const std::size_t block = int_pow(n, M);
    std::size_t total = 0;
    for (int m = 1; m <= M; ++m) total += int_pow(n, m);
    Eigen::VectorXcd w(static_cast<Eigen::Index>(total));
    std::size_t off = 0;
    for (int m = 1; m <= M; ++m) {
        const std::size_t len = int_pow(n, m);
        w.segment(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(len)) =
            y.segment(static_cast<Eigen::Index>(static_cast<std::size_t>(m) * block - len), static_cast<Eigen::Index>(len));
        off += len;
    }
    return w;
}

/// Norm of every coordinate outside the trailing blocks.
inline double extended_padding_norm(const Eigen::VectorXcd& y, std::size_t n, int M) {
    const std::size_t block = int_pow(n, M);
    double sq = 0.0;
    for (int m = 1; m <= M; ++m) {
        const std::size_t len = int_pow(n, m);
        sq += y.segment(static_cast<Eigen::Index>(static_cast<std::size_t>(m - 1) * block),
                        static_cast<Eigen::Index>(block - len))
                  .squaredNorm();
    }
    return std::sqrt(sq);
}

struct ExtendedResult {
    Eigen::VectorXcd y;
    std::vector<Eigen::VectorXcd> samples;
};

inline ExtendedResult extended_solve(const Eigen::VectorXcd& y0, const NonlinearSystem& sys, int M, double T,
                                     double tol = 1e-10, const std::vector<double>& times = {}) {
    check_reference_tol(tol);
    const ExtendedCarlemanSystem es(sys, M);
    if (static_cast<std::size_t>(y0.size()) != es.dimension()) throw InputError("extended state has the wrong length");
    auto rhs = [&](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& out) { es.apply(y, out); };
    ExtendedResult res;
    res.y = detail::integrate_with_samples(rhs, y0, T, tol, times, &res.samples);
    return res;
}

/// Oracle for du/dt = F₁u - a u∘u: Lawson–Dormand–Prince with B exact in Fourier space.
///
/// Aborts with BlowUpError once ‖u‖ exceeds 10³‖u0‖.
inline StateVector nonlinear_reference_solve(const StateVector& u0, const NonlinearSystem& sys, double T,
                                             double tol = 1e-10) {
    check_reference_tol(tol);
    if (!(u0.grid == sys.base().grid())) throw InputError("state and system live on different grids");
    const UnitaryFFT fft(fft_shape(u0.grid));
    const Eigen::ArrayXd lin = (-sys.potential().array() + sys.a());
    const double a = sys.a();
    const double limit = 1e3 * u0.norm();
    Eigen::VectorXcd u(u0.data.size());
    auto rhs = [&](double, const Eigen::VectorXcd& yhat, Eigen::VectorXcd& out) {
        u = fft.to_physical(yhat);
        u.array() = u.array() * lin - a * u.array().square();
        out = fft.to_frequency(u);
    };
    auto watch = [&](double t, const Eigen::VectorXcd& yhat) {
        if (yhat.norm() > limit) throw BlowUpError("nonlinear solution exceeded 1e3 ||u0|| at t=" + std::to_string(t));
    };
    OdeOptions opts;
    opts.tol = tol;
    Eigen::VectorXcd yhat =
        integrate_lawson(sys.base().symbol().eigenvalues, rhs, fft.to_frequency(u0.data), 0.0, T, opts, watch);
    return StateVector(u0.grid, fft.to_physical(std::move(yhat)));
}

}  // namespace frakdiff
