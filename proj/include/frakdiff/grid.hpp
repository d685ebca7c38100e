#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "frakdiff/errors.hpp"

namespace frakdiff {

using MultiIndex = std::vector<std::int64_t>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Periodic tensor grid on [0,1)^d with N equispaced nodes j/N per axis.
///
/// Flat indices are row-major: axis 0 varies slowest, so the flat index of
/// (n_0, ..., n_{d-1}) is ((n_0 N + n_1) N + ...) N + n_{d-1}. This matches the
/// tensor ordering |n_0>|n_1>...|n_{d-1}> and the FFTW multi-dimensional layout.
class Grid {
public:
    Grid(int d, std::size_t N) : d_(d), N_(N) {
        if (d < 1) throw ConfigurationError("grid dimension must be positive");
        if (N < 2 || !is_power_of_two(N)) throw ConfigurationError("grid size N must be a power of two >= 2");
        std::size_t total = 1;
        for (int a = 0; a < d; ++a) {
            if (total > std::numeric_limits<std::size_t>::max() / N / 16)
                throw SizeGuardError("grid size N^d does not fit addressable memory");
            total *= N;
        }
        size_ = total;
    }

    int dim() const noexcept { return d_; }
    std::size_t points_per_axis() const noexcept { return N_; }
    std::size_t size() const noexcept { return size_; }

    MultiIndex unflatten(std::size_t flat) const {
        MultiIndex m(static_cast<std::size_t>(d_));
        for (int a = d_ - 1; a >= 0; --a) {
            m[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(flat % N_);
            flat /= N_;
        }
        return m;
    }

    std::size_t flatten(std::span<const std::int64_t> m) const {
        if (m.size() != static_cast<std::size_t>(d_)) throw InputError("multi-index has wrong dimension");
        std::size_t flat = 0;
        for (auto c : m) {
            if (c < 0 || static_cast<std::size_t>(c) >= N_) throw InputError("multi-index component out of range");
            flat = flat * N_ + static_cast<std::size_t>(c);
        }
        return flat;
    }

    /// Spatial coordinate n_a / N of every axis for a flat index.
    std::vector<double> coordinates(std::size_t flat) const {
        std::vector<double> x(static_cast<std::size_t>(d_));
        for (int a = d_ - 1; a >= 0; --a) {
            x[static_cast<std::size_t>(a)] = static_cast<double>(flat % N_) / static_cast<double>(N_);
            flat /= N_;
        }
        return x;
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int d_;
    std::size_t N_;
    std::size_t size_ = 0;
};

/// Signed frequency of one grid index: m if m <= N/2, m - N otherwise.
inline std::int64_t fold_component(std::int64_t m, std::size_t N) {
    const auto n = static_cast<std::int64_t>(N);
    if (m < 0 || m >= n) throw InputError("frequency index out of range [0, N-1]");
    return (2 * m <= n) ? m : m - n;
}

/// Componentwise index folding i(m); works for any N >= 1.
inline MultiIndex fold_index(std::span<const std::int64_t> m, std::size_t N) {
    MultiIndex out(m.size());
    for (std::size_t a = 0; a < m.size(); ++a) out[a] = fold_component(m[a], N);
    return out;
}

}  // namespace frakdiff
