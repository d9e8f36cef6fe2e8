#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mmotune {

/// SplitMix64 finalizer; used for stable, platform-independent hashing.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept
{
    return mix64(seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

/// 64-bit FNV-1a over bytes.
constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Maps a 64-bit hash onto [0, 1) with 53 bits of resolution.
constexpr double unit_interval(std::uint64_t h) noexcept
{
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Per-run generator. The engine is std::mt19937_64; the distributions are
/// implemented here so sequences do not depend on the standard library vendor.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [lo, hi], unbiased by rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi)
    {
        auto span = static_cast<std::uint64_t>(hi - lo);
        if (span == 0)
            return lo;
        if (span == ~std::uint64_t{0})
            return static_cast<std::int64_t>(next());
        std::uint64_t range = span + 1;
        std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range);
        std::uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return lo + static_cast<std::int64_t>(r % range);
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1)); }

    double uniform01() { return unit_interval(next()); }

    bool coin() { return (next() >> 63) != 0; }

    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform01() < p); }

private:
    std::mt19937_64 engine_;
};

} // namespace mmotune
