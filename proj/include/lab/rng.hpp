#pragma once

#include <cstdint>
#include <random>

namespace lab {

// splitmix64 finalizer; used to derive independent sub-seeds from a
// master seed and a stream index.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t sub_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(mix64(seed));
}

// Draws a single fair bit.
inline int fair_bit(std::mt19937_64& eng) {
    return static_cast<int>(eng() >> 63);
}

// Draws k fair bits as an integer in [0, 2^k).
inline std::uint64_t fair_bits(std::mt19937_64& eng, int k) {
    if (k == 0) return 0;
    return eng() >> (64 - k);
}

}  // namespace lab
