#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fdescent/stats/numeric.hpp"

namespace fdescent::stats {

namespace detail {

inline void check_binomial_args(std::uint64_t n, std::uint64_t k, double p0) {
    if (k > n) throw DomainError("binomial: k must not exceed n");
    if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("binomial: p0 must lie in (0, 1)");
}

// Log-weights of Binomial(n, p0) relative to the mode, built by the ratio
// recurrence w(i+1)/w(i) = (n-i)/(i+1) * p0/(1-p0). Normalizing by their sum
// cancels the common scale, so complementary tails add to one to rounding.
inline std::vector<double> binomial_ln_weights(std::uint64_t n, double p0) {
    const double ln_odds = std::log(p0) - std::log1p(-p0);
    std::vector<double> w(n + 1, 0.0);
    const auto mode = std::min<std::uint64_t>(n, static_cast<std::uint64_t>(std::floor((n + 1) * p0)));
    for (std::uint64_t i = mode; i < n; ++i) {
        w[i + 1] = w[i] + std::log(static_cast<double>(n - i) / static_cast<double>(i + 1)) + ln_odds;
    }
    for (std::uint64_t i = mode; i > 0; --i) {
        w[i - 1] = w[i] - std::log(static_cast<double>(n - i + 1) / static_cast<double>(i)) - ln_odds;
    }
    return w;
}

// ln P(first <= X <= last) under Binomial(n, p0).
inline double binomial_ln_range(std::uint64_t n, std::uint64_t first, std::uint64_t last, double p0) {
    const std::vector<double> w = binomial_ln_weights(n, p0);
    const std::span<const double> all(w);
    return log_sum_exp(all.subspan(first, last - first + 1)) - log_sum_exp(all);
}

}  // namespace detail

// Upper tail P(X >= k) for X ~ Binomial(n, p0), summed exactly in log space.
inline double binomial_tail(std::uint64_t n, std::uint64_t k, double p0) {
    detail::check_binomial_args(n, k, p0);
    if (k == 0) return 1.0;
    return std::exp(detail::binomial_ln_range(n, k, n, p0));
}

// Lower tail P(X <= k).
inline double binomial_cdf(std::uint64_t n, std::uint64_t k, double p0) {
    detail::check_binomial_args(n, k, p0);
    if (k == n) return 1.0;
    return std::exp(detail::binomial_ln_range(n, 0, k, p0));
}

}  // namespace fdescent::stats
