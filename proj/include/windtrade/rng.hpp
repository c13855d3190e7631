#pragma once

#include <cstdint>
#include <random>

namespace windtrade {

/// Purpose tags keep streams for different consumers disjoint, so adding a
/// new consumer never perturbs existing draws.
enum class StreamTag : std::uint64_t {
    Forecast = 1,
    Production = 2,
    MultiStart = 3,
    Synthetic = 4,
    Test = 99,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent generator keyed by (seed, index, tag).
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, StreamTag tag) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ (static_cast<std::uint64_t>(tag) * 0xD1B54A32D192ED03ULL));
    h = splitmix64(h ^ index);
    return std::mt19937_64(h);
}

}  // namespace windtrade
