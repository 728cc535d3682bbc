#ifndef ISOSCAPE_DETAIL_RNG_HPP
#define ISOSCAPE_DETAIL_RNG_HPP

#include <cmath>
#include <cstdint>

/**
 * @file rng.hpp
 *
 * @brief Deterministic, splittable random number generation.
 *
 * All randomness in the library flows from one 64-bit master seed through
 * SplitMix64 (Steele, Lea & Flood 2014). Child streams are addressed by a
 * counter: `derive_seed(master, i)` is the (i+1)-th output of the SplitMix64
 * sequence seeded with `master`, computed in constant time. Work items
 * (bootstrap iterations, sampled years) each get their own child seed, so
 * results are independent of thread count and scheduling.
 *
 * The standard `<random>` distributions are implementation-defined and
 * therefore unusable for a bit-reproducibility contract; the few samplers
 * needed (bounded integers, unit uniforms, normals) are spelled out here.
 */

namespace isoscape {
namespace detail {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /** Uniform in [0, n). Unbiased via rejection; n must be > 0. */
    std::uint64_t bounded(std::uint64_t n) {
        std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    /** Uniform double in [0, 1) with 53 significant bits. */
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /** Standard normal deviate (Box-Muller, one of the pair). */
    double normal() {
        double u1 = uniform01();
        // keep log() finite
        while (u1 <= 0.0) {
            u1 = uniform01();
        }
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

/** Child seed for stream index `stream` of master seed `master`. */
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}
}

#endif
