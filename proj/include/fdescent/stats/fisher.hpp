#pragma once
// Two-sided Fisher's exact test on 2x2 contingency tables.
//
//              col 1   col 2
//   row 1        a       b
//   row 2        c       d
//
// With the margins fixed, the top-left cell follows a hypergeometric law.
// The two-sided p-value sums the point probabilities of every table that is
// no more likely than the observed one.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "fdescent/stats/numeric.hpp"

namespace fdescent::stats {

struct Table2x2 {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    std::uint64_t c = 0;
    std::uint64_t d = 0;

    std::uint64_t n() const noexcept { return a + b + c + d; }
    std::uint64_t row1() const noexcept { return a + b; }
    std::uint64_t row2() const noexcept { return c + d; }
    std::uint64_t col1() const noexcept { return a + c; }
    std::uint64_t col2() const noexcept { return b + d; }
};

// Point probability ln P(top-left = x) for the margins of `t`.
inline double hypergeometric_ln_pmf(const Table2x2& t, std::uint64_t x) {
    const std::uint64_t r1 = t.row1();
    const std::uint64_t r2 = t.row2();
    const std::uint64_t c1 = t.col1();
    if (x > r1 || x > c1 || c1 - x > r2) {
        return -std::numeric_limits<double>::infinity();
    }
    return ln_choose(r1, x) + ln_choose(r2, c1 - x) - ln_choose(t.n(), c1);
}

inline double fisher_exact_two_sided(const Table2x2& t) {
    if (t.n() == 0) {
        throw DomainError("fisher_exact_two_sided: empty table");
    }
    if (t.row1() == 0 || t.row2() == 0 || t.col1() == 0 || t.col2() == 0) {
        return 1.0;
    }

    const std::uint64_t c1 = t.col1();
    const std::uint64_t lo = c1 > t.row2() ? c1 - t.row2() : 0;
    const std::uint64_t hi = std::min(t.row1(), c1);

    const double ln_obs = hypergeometric_ln_pmf(t, t.a);
    // Relative tolerance 1e-12 on the point probability, widened for the
    // rounding of large log-factorials.
    const double slack = 1e-12 * std::max(1.0, std::abs(ln_obs));

    std::vector<double> all, included;
    all.reserve(hi - lo + 1);
    for (std::uint64_t x = lo; x <= hi; ++x) {
        const double lp = hypergeometric_ln_pmf(t, x);
        all.push_back(lp);
        if (lp <= ln_obs + slack) included.push_back(lp);
    }
    // Normalizing by the full support cancels rounding shared by every term.
    const double p = std::exp(log_sum_exp(included) - log_sum_exp(all));
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace fdescent::stats
