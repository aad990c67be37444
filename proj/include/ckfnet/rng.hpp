#pragma once

#include <cstdint>

#include "ckfnet/matrix.hpp"

namespace ckfnet {

/**
 * @brief Counter-based deterministic random stream.
 *
 * Draw k with seed s depends only on (s, k), so identical (seed, counter)
 * pairs reproduce identical values on any platform with IEEE-754 doubles.
 */
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t counter = 0)
        : seed_(seed), counter_(counter) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double next_uniform();

    /// Standard normal via Box-Muller (two uniforms per draw).
    double next_normal();

    /// Uniform in [lo, hi).
    double next_uniform_in(double lo, double hi);

    /// Uniform integer in [0, bound).
    std::uint64_t next_below(std::uint64_t bound);

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

/**
 * @brief Draws L·u with u a vector of independent standard normals.
 *
 * The factor is any lower-triangular matrix, including zero for the exact
 * noise-free mode.
 */
Vector gaussian_draw(RngStream& rng, const Matrix& cov_factor_lower);

}  // namespace ckfnet
