#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lsgfn {

using Rng = std::mt19937_64;

// splitmix64, used to decorrelate derived seeds and to hash strings.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent stream for a (master seed, purpose) pair.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(mix64(seed ^ mix64(stream)));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Index drawn from unnormalized non-negative weights.
inline std::size_t sample_index(Rng& rng, const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

inline std::uint64_t hash_string(const std::string& s, std::uint64_t seed) {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    for (unsigned char c : s) h = mix64(h ^ c);
    return h;
}

} // namespace lsgfn
