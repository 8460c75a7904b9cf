#pragma once
#include <cstdint>
#include <random>

namespace astat {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// substream key for (trial, stream) under one master seed; independent of scheduling
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t trial, std::uint64_t stream) {
    return splitmix64(splitmix64(splitmix64(master) ^ trial) ^ (stream * 0xd1b54a32d192ed03ULL));
}

inline std::mt19937_64 substream(std::uint64_t master, std::uint64_t trial, std::uint64_t stream) {
    return std::mt19937_64(substream_seed(master, trial, stream));
}

// stream ids reserved for non-particle draws
inline constexpr std::uint64_t kStreamGaps = 0xFFFF0001ULL;
inline constexpr std::uint64_t kStreamBoundary = 0xFFFF0002ULL;
inline constexpr std::uint64_t kStreamLeft = 0xFFFF0003ULL;

}  // namespace astat
