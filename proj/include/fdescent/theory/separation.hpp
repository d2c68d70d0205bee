#pragma once
// Fixed-budget comparison of coordinate-sparse directional ascent against
// best-of-N sampling. Both spend Q oracle queries; both start from the same
// uniform prior over B_R(z*).

#include <cstdint>

#include "fdescent/stats/rng.hpp"
#include "fdescent/theory/best_of_n.hpp"
#include "fdescent/theory/first_order.hpp"

namespace fdescent::theory {

struct SeparationPoint {
    std::size_t d = 0;
    std::uint64_t queries = 0;
    double first_order_gap = 0.0;  // empirical mean final gap
    double first_order_se = 0.0;
    double best_of_n_gap = 0.0;    // closed form at N = queries

    double ratio() const noexcept { return best_of_n_gap / first_order_gap; }
};

// Curvatures spread over [mu, L]. Best-of-N is charged its isotropic closed
// form with curvature mu, which lower-bounds its gap on the spread instance.
inline SeparationPoint dimension_separation(std::size_t d, std::uint64_t queries, double mu, double L, double radius,
                                            std::size_t trials, const stats::RngStream& base) {
    const auto inst = QuadraticInstance::spread(d, mu, L, radius);
    const auto oracle = DirectionOracle::coordinate_sparse(d);
    const GapCurve curve = mean_gap_curve(inst, oracle, static_cast<std::size_t>(queries), trials, base);
    SeparationPoint p;
    p.d = d;
    p.queries = queries;
    p.first_order_gap = curve.mean.back();
    p.first_order_se = curve.se.back();
    p.best_of_n_gap = best_of_n_closed_form(queries, d, mu, radius);
    return p;
}

}  // namespace fdescent::theory
