#pragma once

#include <cstdint>

namespace hkflow {

/// SplitMix64 evaluated at an explicit counter.
///
/// Output k of the stream seeded with `seed` is mix(seed + (k + 1) * 0x9E3779B97F4A7C15),
/// so any element can be regenerated without replaying the stream. All randomness in the
/// workbench (initial conditions, generated suites) is drawn from this function.
constexpr std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t counter) noexcept
{
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double unit_double(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential view over splitmix64_at.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed, std::uint64_t start = 0) noexcept
        : seed_(seed), counter_(start) {}

    constexpr std::uint64_t next() noexcept { return splitmix64_at(seed_, counter_++); }
    constexpr double uniform() noexcept { return unit_double(next()); }
    constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi].
    constexpr long uniform_int(long lo, long hi) noexcept
    {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<long>(next() % span);
    }

    constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

} // namespace hkflow
