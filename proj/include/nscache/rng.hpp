#pragma once

#include <cstdint>
#include <random>

namespace nscache {

using Rng = std::mt19937_64;

// Derives an independent seeded stream from a base seed and a stream tag
// (splitmix64 finalizer). Batch shuffling and negative sampling use separate
// streams so sampler ablations see identical batch orders.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return Rng{z};
}

}  // namespace nscache
