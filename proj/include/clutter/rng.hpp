#pragma once

#include <cstdint>

namespace clutter {

// Counter-based RNG: every draw is a pure function of (seed, stream indices),
// so parallel corpus generation stays reproducible regardless of call order.
namespace rng {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

inline uint64_t draw_u64(uint64_t seed, uint64_t s0, uint64_t s1 = 0, uint64_t s2 = 0) {
    uint64_t h = splitmix64(seed);
    h = hash_combine(h, s0);
    h = hash_combine(h, s1);
    h = hash_combine(h, s2);
    return splitmix64(h);
}

// Uniform in [0, 1).
inline double draw_unit(uint64_t seed, uint64_t s0, uint64_t s1 = 0, uint64_t s2 = 0) {
    return static_cast<double>(draw_u64(seed, s0, s1, s2) >> 11) * 0x1.0p-53;
}

inline double draw_range(double lo, double hi, uint64_t seed, uint64_t s0, uint64_t s1 = 0,
                         uint64_t s2 = 0) {
    return lo + (hi - lo) * draw_unit(seed, s0, s1, s2);
}

}  // namespace rng
}  // namespace clutter
