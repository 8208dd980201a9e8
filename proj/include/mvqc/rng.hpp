#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mvqc {

using Rng = std::mt19937_64;

/// Independent sub-stream for (master seed, stream tag, index).
///
/// The splitting rule is a std::seed_seq over the 32-bit halves of the three
/// words, so sample `i` of stream `tag` always sees the same generator no
/// matter which worker evaluates it or in which order.
inline Rng substream(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(tag),    static_cast<std::uint32_t>(tag >> 32),
                      static_cast<std::uint32_t>(index),  static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

/// Stream tag from a short list of integers (e.g. {n, p_index}).
inline std::uint64_t stream_tag(std::initializer_list<std::uint64_t> parts) {
    // splitmix64 finalizer folded over the parts
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto v : parts) {
        std::uint64_t z = h + v + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        h = z ^ (z >> 31);
    }
    return h;
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace mvqc
