#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "frakdiff/errors.hpp"

namespace frakdiff {

namespace detail {

// FFTW planning is not thread-safe; execution with the new-array interface is.
// Plans are created once per (shape, direction) and live for the whole process.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(const std::vector<int>& shape, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(shape, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::size_t total = 1;
        for (int n : shape) total *= static_cast<std::size_t>(n);
        std::vector<std::complex<double>> scratch(total);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), buf, buf, sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr) throw Error("FFTW failed to create a plan");
        plans_.emplace(std::move(key), plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::pair<std::vector<int>, int>, fftw_plan> plans_;
};

}  // namespace detail

/// Unitary multi-dimensional DFT over a row-major array of shape `shape`.
///
/// `to_frequency` applies (F^{-1})^{⊗r} with F|j> = N^{-1/2} Σ_l ω^{jl}|l>, ω = e^{2πi/N},
/// i.e. the negative-exponent DFT scaled by N^{-1/2} per axis; `to_physical` applies F^{⊗r}.
class UnitaryFFT {
public:
    explicit UnitaryFFT(std::vector<int> shape) : shape_(std::move(shape)) {
        std::size_t total = 1;
        for (int n : shape_) {
            if (n < 1) throw InputError("FFT axis length must be positive");
            total *= static_cast<std::size_t>(n);
        }
        size_ = total;
        scale_ = 1.0 / std::sqrt(static_cast<double>(total));
        forward_ = detail::PlanCache::instance().get(shape_, FFTW_FORWARD);
        backward_ = detail::PlanCache::instance().get(shape_, FFTW_BACKWARD);
    }

    std::size_t size() const noexcept { return size_; }

    void to_frequency_inplace(Eigen::VectorXcd& v) const { run(forward_, v); }
    void to_physical_inplace(Eigen::VectorXcd& v) const { run(backward_, v); }

    Eigen::VectorXcd to_frequency(Eigen::VectorXcd v) const {
        to_frequency_inplace(v);
        return v;
    }
    Eigen::VectorXcd to_physical(Eigen::VectorXcd v) const {
        to_physical_inplace(v);
        return v;
    }

private:
    void run(fftw_plan plan, Eigen::VectorXcd& v) const {
        if (static_cast<std::size_t>(v.size()) != size_) throw InputError("FFT input has wrong length");
        auto* buf = reinterpret_cast<fftw_complex*>(v.data());
        fftw_execute_dft(plan, buf, buf);
        v *= scale_;
    }

    std::vector<int> shape_;
    std::size_t size_ = 0;
    double scale_ = 1.0;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

}  // namespace frakdiff
