#pragma once
// Counter-based random streams. A stream is keyed by (seed, replicate, role)
// and draw k is a pure function of (key, k), so adding or reordering
// consumers never shifts anybody else's draws.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace ivcr {

enum class StreamRole : std::uint64_t {
    latent_rank = 1,
    instrument = 2,
    selection_noise = 3,
    censoring = 4,
    resample = 5,
    bootstrap_seed = 6,
    audit = 7,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr CounterRng(std::uint64_t seed, std::uint64_t replicate, StreamRole role) noexcept
        : key_(detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^ replicate) ^
                                  static_cast<std::uint64_t>(role))) {}

    /// Draw number `index` of this stream.
    constexpr std::uint64_t at(std::uint64_t index) const noexcept {
        return detail::splitmix64(key_ ^ detail::splitmix64(index + 0x632BE59BD9B4E019ULL));
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform_at(std::uint64_t index) const noexcept {
        return static_cast<double>(at(index) >> 11) * 0x1.0p-53;
    }

    /// Standard normal from draws 2*index and 2*index+1 (Box-Muller, cosine branch).
    double normal_at(std::uint64_t index) const noexcept {
        const double u1 = 1.0 - uniform_at(2 * index);  // (0, 1]
        const double u2 = uniform_at(2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Sequential interface (UniformRandomBitGenerator).
    std::uint64_t operator()() noexcept { return at(counter_++); }
    double uniform() noexcept { return uniform_at(counter_++); }
    static constexpr std::uint64_t min() noexcept { return 0; }
    static constexpr std::uint64_t max() noexcept { return std::numeric_limits<std::uint64_t>::max(); }

    /// Uniform integer in [0, n) by rejection, unbiased.
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = max() - max() % n;
        for (;;) {
            const std::uint64_t x = (*this)();
            if (x < limit) return x % n;
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace ivcr
