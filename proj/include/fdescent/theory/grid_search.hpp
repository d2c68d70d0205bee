#pragma once
// Exhaustive grid search on the quadratic with an eps-optimal ball of radius
// rho_eps = sqrt(2 eps / mu). A hypercubic grid with spacing h has covering
// radius sqrt(d) h / 2, so h = 2 rho_eps / sqrt(d) guarantees an eps-optimal
// grid point, and covering B_R needs at least (R sqrt(d) / (2 rho_eps))^d points.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fdescent/error.hpp"

namespace fdescent::theory {

inline double eps_optimal_radius(double mu, double eps) {
    if (!(mu > 0.0) || !(eps > 0.0)) throw DomainError("grid: mu and eps must be positive");
    return std::sqrt(2.0 * eps / mu);
}

inline double grid_spacing_for(double rho_eps, std::size_t d) {
    return 2.0 * rho_eps / std::sqrt(static_cast<double>(d));
}

inline double covering_radius(double h, std::size_t d) { return std::sqrt(static_cast<double>(d)) * h / 2.0; }

// Lower bound on grid size. Returned as double: it is exponential in d.
// The ceiling ignores a 1e-9 relative excess so that exact integers computed
// through sqrt/pow (e.g. (sqrt(2)/0.2)^2 = 50) are not bumped up by rounding.
inline double grid_points_required(double radius, std::size_t d, double mu, double eps) {
    if (!(radius > 0.0) || d < 1) throw DomainError("grid: R and d must be positive");
    const double rho = eps_optimal_radius(mu, eps);
    if (rho > radius) return 1.0;
    const double base = radius * std::sqrt(static_cast<double>(d)) / (2.0 * rho);
    const double raw = std::pow(base, static_cast<double>(d));
    const double nearest = std::round(raw);
    if (std::abs(raw - nearest) <= 1e-9 * raw) return std::max(1.0, nearest);
    return std::max(1.0, std::ceil(raw));
}

// Nearest point of the lattice h Z^d (anchored at `origin`) to z.
inline std::vector<double> nearest_grid_point(std::span<const double> z, double h, std::span<const double> origin) {
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        g[i] = origin[i] + h * std::round((z[i] - origin[i]) / h);
    }
    return g;
}

// Gap mu/2 |z* - g|^2 achieved by the best grid point for optimum z*.
inline double grid_best_gap(std::span<const double> z_star, double h, double mu, std::span<const double> origin) {
    const auto g = nearest_grid_point(z_star, h, origin);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += (g[i] - z_star[i]) * (g[i] - z_star[i]);
    return 0.5 * mu * s;
}

// Worst case for a hypercubic grid: the optimum sits at a cell centre.
inline std::vector<double> adversarial_optimum(std::span<const double> origin, double h) {
    std::vector<double> z(origin.begin(), origin.end());
    for (double& x : z) x += 0.5 * h;
    return z;
}

// Lattice points h Z^d (anchored at the ball centre) inside B_R; only for small d.
inline std::uint64_t count_grid_points_in_ball(double radius, double h, std::size_t d) {
    if (d < 1 || d > 4) throw DomainError("grid: point counting limited to d <= 4");
    const auto k = static_cast<std::int64_t>(std::floor(radius / h));
    std::vector<std::int64_t> idx(d, -k);
    std::uint64_t count = 0;
    const double r2 = radius * radius;
    while (true) {
        double s = 0.0;
        for (auto i : idx) s += (static_cast<double>(i) * h) * (static_cast<double>(i) * h);
        if (s <= r2) ++count;
        std::size_t pos = 0;
        while (pos < d && idx[pos] == k) idx[pos++] = -k;
        if (pos == d) break;
        ++idx[pos];
    }
    return count;
}

}  // namespace fdescent::theory
