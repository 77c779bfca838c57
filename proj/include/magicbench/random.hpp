#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "magicbench/core.hpp"

namespace magicbench {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix_seed(seed ^ mix_seed(stream + 0x632BE59BD9B4E019ull));
}

// 64-bit FNV-1a; stable across platforms and builds, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline Complex complex_normal(Rng& rng, double stddev) {
    std::normal_distribution<double> g(0.0, stddev);
    const double re = g(rng);
    const double im = g(rng);
    return {re, im};
}

// Haar-random pure state (normalized complex Gaussian vector).
inline StateVector random_state(int n, Rng& rng) {
    StateVector v(n);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = complex_normal(rng, 1.0);
    v.normalize();
    return v;
}

} // namespace magicbench
