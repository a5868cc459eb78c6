// Counter-based deterministic RNG. Streams are derived by hashing
// (seed, tag, index...) so parallel consumers get independent sequences
// that do not depend on scheduling order.
#pragma once

#include <cstdint>

namespace warpfield {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(splitmix64(seed)) {}
    Rng(uint64_t seed, uint64_t stream) : state(splitmix64(hash_combine(seed, stream))) {}
    Rng(uint64_t seed, uint64_t stream, uint64_t substream)
        : state(splitmix64(hash_combine(hash_combine(seed, stream), substream))) {}

    uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        uint64_t x = state;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }
    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return n ? next() % n : 0; }
};

}  // namespace warpfield
