#pragma once

#include <cstdint>
#include <random>

namespace dynkin {

// Independent random sources of one path.
enum class Stream : std::uint64_t { Noise = 1, Clock = 2, Bridge = 3, Envelope = 4, Calibration = 5 };

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Engine for (seed, path, stream); depends on nothing else, so results do
// not change with the number of workers or the order paths are processed in.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t path, Stream stream) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ path);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    return std::mt19937_64(h);
}

}  // namespace dynkin
