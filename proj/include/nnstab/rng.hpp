#pragma once

#include <cstdint>
#include <random>

namespace nnstab {

// splitmix64 finaliser; used to derive independent substream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ index);
}

using Rng = std::mt19937_64;

// Stream tags.
enum : std::uint64_t {
    kStreamInit = 1,
    kStreamSigns = 2,
    kStreamTrain = 3,
    kStreamReplace = 4,
    kStreamHoldout = 5,
    kStreamTeacher = 6,
    kStreamSample = 7,
};

}  // namespace nnstab
