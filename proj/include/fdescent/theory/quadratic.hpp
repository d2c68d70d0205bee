#pragma once
// Diagonal concave quadratic r(z) = r* - 1/2 sum_i lambda_i (z_i - z*_i)^2.
// With lambda_i in [mu, L] it is L-smooth and satisfies the mu-PL inequality
// 1/2 |grad r|^2 >= mu (r* - r(z)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fdescent/error.hpp"
#include "fdescent/stats/numeric.hpp"
#include "fdescent/stats/rng.hpp"

namespace fdescent::theory {

class QuadraticInstance {
public:
    QuadraticInstance(std::vector<double> eigenvalues, std::vector<double> z_star, double mu, double L,
                      double radius, double r_star = 0.0)
        : eigenvalues_(std::move(eigenvalues)),
          z_star_(std::move(z_star)),
          mu_(mu),
          L_(L),
          radius_(radius),
          r_star_(r_star) {
        if (eigenvalues_.empty()) throw DomainError("quadratic: dimension must be at least 1");
        if (eigenvalues_.size() != z_star_.size()) throw DomainError("quadratic: eigenvalue/optimum size mismatch");
        if (!(mu_ > 0.0) || !(L_ >= mu_)) throw DomainError("quadratic: need 0 < mu <= L");
        if (!(radius_ > 0.0)) throw DomainError("quadratic: radius must be positive");
        const auto [lo, hi] = std::minmax_element(eigenvalues_.begin(), eigenvalues_.end());
        if (*lo < mu_ || *hi > L_) throw DomainError("quadratic: eigenvalues must lie in [mu, L]");
    }

    // All curvatures equal to mu, optimum at the origin.
    static QuadraticInstance isotropic(std::size_t d, double mu, double radius) {
        return {std::vector<double>(d, mu), std::vector<double>(d, 0.0), mu, mu, radius};
    }

    // Curvatures evenly spaced over [mu, L], optimum at the origin.
    static QuadraticInstance spread(std::size_t d, double mu, double L, double radius) {
        std::vector<double> eig(d, mu);
        for (std::size_t i = 0; i < d && d > 1; ++i) {
            eig[i] = mu + (L - mu) * static_cast<double>(i) / static_cast<double>(d - 1);
        }
        return {std::move(eig), std::vector<double>(d, 0.0), mu, L, radius};
    }

    std::size_t dim() const noexcept { return eigenvalues_.size(); }
    double mu() const noexcept { return mu_; }
    double L() const noexcept { return L_; }
    double radius() const noexcept { return radius_; }
    double r_star() const noexcept { return r_star_; }
    std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
    std::span<const double> z_star() const noexcept { return z_star_; }

    // r(z*) - r(z) >= 0.
    double gap(std::span<const double> z) const {
        stats::CompensatedSum acc;
        for (std::size_t i = 0; i < dim(); ++i) {
            const double e = z[i] - z_star_[i];
            acc += 0.5 * eigenvalues_[i] * e * e;
        }
        return acc.value();
    }

    double value(std::span<const double> z) const { return r_star_ - gap(z); }

    double partial(std::span<const double> z, std::size_t i) const {
        return -eigenvalues_[i] * (z[i] - z_star_[i]);
    }

    void gradient(std::span<const double> z, std::span<double> out) const {
        for (std::size_t i = 0; i < dim(); ++i) out[i] = partial(z, i);
    }

    double distance_to_optimum(std::span<const double> z) const {
        double s = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) {
            const double e = z[i] - z_star_[i];
            s += e * e;
        }
        return std::sqrt(s);
    }

private:
    std::vector<double> eigenvalues_;
    std::vector<double> z_star_;
    double mu_;
    double L_;
    double radius_;
    double r_star_;
};

// Uniform point in the ball B_radius(center): a normalized Gaussian direction
// scaled by radius * U^(1/d).
inline void sample_uniform_ball(std::span<const double> center, double radius, stats::RngStream& rng,
                                std::span<double> out) {
    const std::size_t d = center.size();
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            out[i] = rng.normal();
            norm2 += out[i] * out[i];
        }
    } while (norm2 == 0.0);
    const double r = radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
    const double scale = r / std::sqrt(norm2);
    for (std::size_t i = 0; i < d; ++i) out[i] = center[i] + scale * out[i];
}

// Point at exactly `distance` from center along a random direction.
inline std::vector<double> sample_sphere_point(std::span<const double> center, double distance,
                                               stats::RngStream& rng) {
    std::vector<double> out(center.size());
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (double& x : out) {
            x = rng.normal();
            norm2 += x * x;
        }
    } while (norm2 == 0.0);
    const double scale = distance / std::sqrt(norm2);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = center[i] + scale * out[i];
    return out;
}

}  // namespace fdescent::theory
