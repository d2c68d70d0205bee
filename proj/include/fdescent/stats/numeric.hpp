#pragma once
// Log-gamma, Beta, and compensated summation helpers.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include "fdescent/error.hpp"

namespace fdescent::stats {

// Neumaier's variant of Kahan summation; order-sensitive but error-bounded.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    CompensatedSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;  // standard error of the mean
    std::uint64_t count = 0;
};

// Welford accumulator for mean and standard error.
class RunningMoments {
public:
    void add(double x) noexcept {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    std::uint64_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double standard_error() const noexcept {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }
    MeanEstimate estimate() const noexcept { return {mean(), standard_error(), n_}; }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline double ln_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("ln_gamma: argument must be positive and finite");
    }
    // lgamma_r avoids the process-global signgam write of std::lgamma.
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

inline double ln_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw DomainError("beta: arguments must be positive");
    }
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
}

inline double beta(double a, double b) { return std::exp(ln_beta(a, b)); }

// ln C(n, k); k outside [0, n] yields -inf.
inline double ln_choose(std::uint64_t n, std::uint64_t k) {
    if (k > n) return -std::numeric_limits<double>::infinity();
    if (k == 0 || k == n) return 0.0;
    const auto nd = static_cast<double>(n);
    const auto kd = static_cast<double>(k);
    return ln_gamma(nd + 1.0) - ln_gamma(kd + 1.0) - ln_gamma(nd - kd + 1.0);
}

// log(sum(exp(terms))) with the max factored out and a compensated inner sum.
inline double log_sum_exp(std::span<const double> terms) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double t : terms) hi = std::max(hi, t);
    if (!std::isfinite(hi)) return hi;
    CompensatedSum acc;
    for (double t : terms) acc += std::exp(t - hi);
    return hi + std::log(acc.value());
}

}  // namespace fdescent::stats
