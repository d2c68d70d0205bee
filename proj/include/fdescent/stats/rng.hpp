#pragma once
// Counter-based random streams.
//
// A stream is keyed by (seed, stream id); the n-th output is a SplitMix64
// finalization of key + n * golden_gamma. Every distribution below is built
// from that integer sequence with explicit arithmetic, so a (seed, stream,
// counter) triple reproduces the same draws on every platform and standard
// library (std:: distributions are implementation-defined).

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace fdescent::stats {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// FNV-1a, used to turn human-readable stream labels into stream ids.
inline constexpr std::uint64_t stream_id(std::string_view label) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

class RngStream {
public:
    using result_type = std::uint64_t;

    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0, std::uint64_t counter = 0) noexcept
        : seed_(seed),
          stream_(stream),
          counter_(counter),
          key_(splitmix64_mix(seed ^ splitmix64_mix(stream + kGamma))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next_u64(); }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return splitmix64_mix(key_ + counter_ * kGamma);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    // Unbiased integer in [0, n); n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) noexcept {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // Integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
        return lo + static_cast<std::int64_t>(uniform_index(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool bernoulli(double p) noexcept { return uniform01() < p; }

    // Standard normal via the Marsaglia polar method; the paired value is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0, v = 0.0, s = 0.0;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Independent child stream; the parent is not advanced.
    RngStream fork(std::uint64_t child) const noexcept {
        return RngStream(seed_, splitmix64_mix(stream_ ^ splitmix64_mix(child + 0xD1B54A32D192ED03ULL)));
    }

    RngStream fork(std::string_view label) const noexcept { return fork(stream_id(label)); }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t counter() const noexcept { return counter_; }

    friend bool operator==(const RngStream& a, const RngStream& b) noexcept {
        return a.seed_ == b.seed_ && a.stream_ == b.stream_ && a.counter_ == b.counter_ &&
               a.has_spare_ == b.has_spare_ && (!a.has_spare_ || a.spare_ == b.spare_);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_;
    std::uint64_t key_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fdescent::stats
