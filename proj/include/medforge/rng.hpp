#pragma once

// Deterministic RNG for every seeded operation. std::mt19937_64 output is
// pinned by the standard; the distribution helpers here avoid
// std::*_distribution, whose algorithms are implementation-defined.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "medforge/util.hpp"

namespace medforge {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    uint64_t seed() const { return seed_; }

    uint64_t next() { return engine_(); }

    // Uniform in [0, n). n must be >= 1.
    uint64_t bounded(uint64_t n) {
        if (n == 0) throw Error("Rng::bounded requires n >= 1");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derives an independent child stream; same (seed, label) -> same child.
    Rng fork(std::string_view label) const {
        return Rng(splitmix64(seed_ ^ fnv1a64(label)));
    }
    Rng fork(uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x51ed2701ull)));
    }

private:
    uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace medforge
