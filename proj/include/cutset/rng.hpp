#ifndef CUTSET_RNG_HPP
#define CUTSET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cutset {

// Counter-based generator. Streams are derived from (seed, stream_id), so
// draws on one stream are unaffected by how many draws other streams (or
// worker threads) have consumed. Output is a splitmix64-style hash of the
// (seed, stream, counter) triple.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream_id)
        : key_(mix(seed ^ (stream_id * 0x9E3779B97F4A7C15ULL))), counter_(0) {}

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        return mix(z);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        return next_u64() % n;  // modulo bias negligible for n << 2^64
    }

    // Box-Muller, no caching: always consumes exactly two uniforms.
    double normal() {
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30; z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27; z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

// Stream ids used by the samplers. Keeping the phi stream separate from
// everything else makes the phi sample path identical across algorithms.
namespace stream {
inline constexpr std::uint64_t aux = 1;
inline constexpr std::uint64_t phi = 2;
inline constexpr std::uint64_t theta = 3;
inline constexpr std::uint64_t grid = 4;
inline constexpr std::uint64_t misc = 5;
}  // namespace stream

}  // namespace cutset

#endif
