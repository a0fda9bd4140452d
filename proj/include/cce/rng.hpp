#ifndef CCE_RNG_HPP
#define CCE_RNG_HPP

#include <cassert>
#include <cstdint>
#include <random>
#include <vector>

namespace cce {

// Deterministic random source. All draws are derived from the raw mt19937_64
// output stream rather than std::uniform_*_distribution, whose results are
// not pinned down by the standard; this keeps seeded runs reproducible across
// standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform draw from [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform draw from [lo, hi).
    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    // Uniform draw from {0, ..., n-1}. n must be positive.
    std::size_t uniform_index(std::size_t n) {
        assert(n > 0);
        auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    // Fisher-Yates shuffle driven by uniform_index.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(values[i - 1], values[j]);
        }
    }

    // Independent substream: same (seed, stream) always yields the same child.
    Rng fork(std::uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x9e3779b97f4a7c15ull)));
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace cce

#endif
