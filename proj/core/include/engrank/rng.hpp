#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <utility>
#include <vector>

namespace engrank {

// splitmix64 step (Vigna). Also used as the finalizer for label-derived
// seeds, so every stream is pinned to the byte level on any platform and
// standard library.
inline std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic non-cryptographic stream for shuffles and synthetic noise.
// std::shuffle / std::normal_distribution are implementation-defined, which
// would break the byte-identical reproducibility contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept { return splitmix64_next(state_); }

    // uniform on [0, 1), 53 bits
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on (0, 1); safe under log()
    double next_open() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal, Box-Muller cosine branch (two uniforms per draw)
    double next_normal() noexcept {
        const double u1 = next_open();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool next_bernoulli(double p) noexcept { return next_double() < p; }

    // uniform integer in [0, bound), bound >= 1. Modulo reduction; the bias
    // is immaterial at survey sizes and the draw sequence stays pinned.
    std::uint64_t next_below(std::uint64_t bound) noexcept {
        return next_u64() % bound;
    }

private:
    std::uint64_t state_;
};

// Sub-seed for a labeled stage: FNV-1a over the label, xor master seed,
// splitmix64-finalized. Labels in use: "split", "synth", "train:<T>",
// "perm:<T>". Any stage can be replayed in isolation from (master, label).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept {
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::uint64_t s = h ^ master;
    return splitmix64_next(s);
}

// In-place Fisher-Yates with a pinned draw order.
template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(values[i - 1], values[j]);
    }
}

}  // namespace engrank
