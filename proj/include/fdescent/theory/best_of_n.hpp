#pragma once
// Best-of-N uniform sampling on the isotropic quadratic
// r(z) = r* - mu/2 |z - z*|^2 over the ball B_R(z*).
//
// The expected gap of the best of N draws is
//   (mu R^2 / 2) N B(1 + 2/d, N) = (mu R^2 / 2) Gamma(1 + 2/d) Gamma(N + 1) / Gamma(N + 1 + 2/d)
// and is bounded below by (mu R^2 / 2) Gamma(1 + 2/d) (N + 2)^(-2/d).

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "fdescent/error.hpp"
#include "fdescent/stats/numeric.hpp"
#include "fdescent/stats/rng.hpp"
#include "fdescent/theory/quadratic.hpp"

namespace fdescent::theory {

namespace detail {
inline void check_best_of_n(std::uint64_t n, std::size_t d, double mu, double radius) {
    if (n < 1) throw DomainError("best-of-N: N must be at least 1");
    if (d < 1) throw DomainError("best-of-N: dimension must be at least 1");
    if (!(mu > 0.0) || !(radius > 0.0)) throw DomainError("best-of-N: mu and R must be positive");
}
}  // namespace detail

inline double best_of_n_closed_form(std::uint64_t n, std::size_t d, double mu, double radius) {
    detail::check_best_of_n(n, d, mu, radius);
    const double a = 2.0 / static_cast<double>(d);
    const auto nd = static_cast<double>(n);
    if (d <= 2) {
        // 2/d is an integer k: N B(1 + k, N) = k! / ((N + 1) ... (N + k)).
        const double f = d == 2 ? 1.0 / (nd + 1.0) : 2.0 / ((nd + 1.0) * (nd + 2.0));
        return 0.5 * mu * radius * radius * f;
    }
    return 0.5 * mu * radius * radius * nd * stats::beta(1.0 + a, nd);
}

inline double best_of_n_lower_bound(std::uint64_t n, std::size_t d, double mu, double radius) {
    detail::check_best_of_n(n, d, mu, radius);
    const double a = 2.0 / static_cast<double>(d);
    return 0.5 * mu * radius * radius * std::exp(stats::ln_gamma(1.0 + a)) *
           std::pow(static_cast<double>(n) + 2.0, -a);
}

// Empirical mean gap of the best of N uniform draws, over `samples` repetitions.
inline stats::MeanEstimate best_of_n_gap(const QuadraticInstance& inst, std::uint64_t n, stats::RngStream& rng,
                                         std::uint64_t samples) {
    detail::check_best_of_n(n, inst.dim(), inst.mu(), inst.radius());
    std::vector<double> x(inst.dim());
    stats::RunningMoments moments;
    for (std::uint64_t s = 0; s < samples; ++s) {
        double best = std::numeric_limits<double>::infinity();
        for (std::uint64_t i = 0; i < n; ++i) {
            sample_uniform_ball(inst.z_star(), inst.radius(), rng, x);
            best = std::min(best, inst.gap(x));
        }
        moments.add(best);
    }
    return moments.estimate();
}

}  // namespace fdescent::theory
