#pragma once
// Seeded, splittable random streams.
//
// A 64-bit seed is expanded with splitmix64 into the 256-bit state of a
// xoshiro256** generator. Independent substreams are derived by mixing the
// seed with a stream index, so trial t of a Monte Carlo run draws the same
// numbers no matter which thread executes it or in what order.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace bran {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) {
        for (auto& word : state_) word = splitmix64(seed);
    }

    /// Substream `index` of the stream family rooted at `seed`.
    static Rng substream(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t mix = seed;
        const std::uint64_t a = splitmix64(mix);
        std::uint64_t idx = index ^ 0xd1b54a32d192ed03ULL;
        const std::uint64_t b = splitmix64(idx);
        return Rng(a ^ (b * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Exponential variate with the given rate by inverse CDF, -ln(1-U)/rate.
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace bran
