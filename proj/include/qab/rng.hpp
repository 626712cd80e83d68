#pragma once

#include <cstdint>

namespace qab {

/// SplitMix64 (Steele, Lea & Flood 2014): 64-bit state advanced by the golden
/// gamma, output mixed by two xor-multiply rounds. Chosen over std::mt19937
/// because its output sequence is fully pinned by this header on every
/// platform, which the reproducibility contract needs.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Derived seed for an independent stream (parallel noise realizations draw
/// from derive_seed(master, index), never from a shared generator).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    SplitMix64 mix(master ^ (stream + 1) * 0x9e3779b97f4a7c15ull);
    mix.next();
    return mix.next();
}

} // namespace qab
