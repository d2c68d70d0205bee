#pragma once
// Ascent with noisy directional feedback on a PL quadratic.
//
// A direction oracle returns v with E[v | z] = alpha * grad r(z) and
// conditional variance at most sigma^2 |grad r(z)|^2. With kappa1 =
// alpha^2 + sigma^2 and step eta = alpha / (L kappa1) the expected gap
// contracts by (1 - mu alpha^2 / (L kappa1)) per step.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fdescent/stats/numeric.hpp"
#include "fdescent/stats/rng.hpp"
#include "fdescent/theory/quadratic.hpp"

namespace fdescent::theory {

enum class DirectionKind { exact_scaled, gaussian_noisy, coordinate_sparse };

struct DirectionOracle {
    DirectionKind kind = DirectionKind::exact_scaled;
    double alpha = 1.0;
    double sigma2 = 0.0;

    static DirectionOracle exact(double alpha) { return {DirectionKind::exact_scaled, alpha, 0.0}; }
    static DirectionOracle gaussian(double alpha, double sigma2) {
        return {DirectionKind::gaussian_noisy, alpha, sigma2};
    }
    // One uniformly chosen coordinate, rescaled by d: alpha = 1, sigma^2 = d - 1.
    static DirectionOracle coordinate_sparse(std::size_t d) {
        return {DirectionKind::coordinate_sparse, 1.0, static_cast<double>(d) - 1.0};
    }

    double kappa1() const noexcept { return alpha * alpha + sigma2; }
    double stepsize(double L) const noexcept { return alpha / (L * kappa1()); }
    // Guaranteed per-step factor on the expected gap.
    double contraction_bound(double mu, double L) const noexcept {
        return 1.0 - mu * alpha * alpha / (L * kappa1());
    }
};

// v = d * (d r / d z_i) * e_i with i uniform over coordinates.
inline std::vector<double> coordinate_oracle(std::span<const double> z, const QuadraticInstance& inst,
                                             stats::RngStream& rng) {
    const std::size_t d = inst.dim();
    std::vector<double> v(d, 0.0);
    const auto i = static_cast<std::size_t>(rng.uniform_index(d));
    v[i] = static_cast<double>(d) * inst.partial(z, i);
    return v;
}

inline void sample_direction(const DirectionOracle& oracle, const QuadraticInstance& inst,
                             std::span<const double> z, stats::RngStream& rng, std::span<double> out) {
    const std::size_t d = inst.dim();
    switch (oracle.kind) {
        case DirectionKind::exact_scaled:
            for (std::size_t i = 0; i < d; ++i) out[i] = oracle.alpha * inst.partial(z, i);
            return;
        case DirectionKind::gaussian_noisy: {
            double grad2 = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                out[i] = inst.partial(z, i);
                grad2 += out[i] * out[i];
            }
            // Isotropic noise with total variance sigma^2 |grad|^2.
            const double sd = std::sqrt(oracle.sigma2 * grad2 / static_cast<double>(d));
            for (std::size_t i = 0; i < d; ++i) out[i] = oracle.alpha * out[i] + sd * rng.normal();
            return;
        }
        case DirectionKind::coordinate_sparse: {
            for (std::size_t i = 0; i < d; ++i) out[i] = 0.0;
            const auto i = static_cast<std::size_t>(rng.uniform_index(d));
            out[i] = static_cast<double>(d) * inst.partial(z, i);
            return;
        }
    }
}

struct FirstOrderTrace {
    std::vector<double> gaps;  // r(z*) - r(z_t), t = 0..T
    bool diverged = false;     // left the 10R ball: the oracle broke its contract
};

// z_{t+1} = z_t + eta v_t. The projection onto the feasible ball is assumed
// inactive; callers start well inside it.
inline FirstOrderTrace run_first_order(const QuadraticInstance& inst, const DirectionOracle& oracle,
                                       std::size_t T, stats::RngStream& rng, std::span<const double> z0,
                                       std::optional<double> eta = std::nullopt) {
    const double step = eta.value_or(oracle.stepsize(inst.L()));
    std::vector<double> z(z0.begin(), z0.end());
    std::vector<double> v(inst.dim());
    FirstOrderTrace trace;
    trace.gaps.reserve(T + 1);
    trace.gaps.push_back(inst.gap(z));
    for (std::size_t t = 0; t < T; ++t) {
        sample_direction(oracle, inst, z, rng, v);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += step * v[i];
        if (!trace.diverged && inst.distance_to_optimum(z) > 10.0 * inst.radius()) trace.diverged = true;
        trace.gaps.push_back(inst.gap(z));
    }
    return trace;
}

struct GapCurve {
    std::vector<double> mean;  // per t
    std::vector<double> se;    // standard error per t
    std::size_t trials = 0;
    std::size_t diverged = 0;
};

// Mean gap trajectory over independent trials; trial k draws from stream k.
// A null `start` means every trial starts uniformly in the feasible ball.
inline GapCurve mean_gap_curve(const QuadraticInstance& inst, const DirectionOracle& oracle, std::size_t T,
                               std::size_t trials, const stats::RngStream& base,
                               std::optional<std::span<const double>> start = std::nullopt,
                               std::optional<double> eta = std::nullopt) {
    std::vector<stats::RunningMoments> moments(T + 1);
    std::vector<double> z0(inst.dim());
    GapCurve curve;
    curve.trials = trials;
    for (std::size_t k = 0; k < trials; ++k) {
        stats::RngStream rng = base.fork(static_cast<std::uint64_t>(k));
        if (start) {
            std::copy(start->begin(), start->end(), z0.begin());
        } else {
            sample_uniform_ball(inst.z_star(), inst.radius(), rng, z0);
        }
        const FirstOrderTrace trace = run_first_order(inst, oracle, T, rng, z0, eta);
        if (trace.diverged) ++curve.diverged;
        for (std::size_t t = 0; t <= T; ++t) moments[t].add(trace.gaps[t]);
    }
    curve.mean.reserve(T + 1);
    curve.se.reserve(T + 1);
    for (const auto& m : moments) {
        curve.mean.push_back(m.mean());
        curve.se.push_back(m.standard_error());
    }
    return curve;
}

}  // namespace fdescent::theory
