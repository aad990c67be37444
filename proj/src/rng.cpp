#include "ckfnet/rng.hpp"

#include <cmath>

namespace ckfnet {

namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double RngStream::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_normal() {
    const double u1 = 1.0 - next_uniform();  // (0, 1]
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double RngStream::next_uniform_in(double lo, double hi) {
    return lo + (hi - lo) * next_uniform();
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
    // modulo bias is negligible for the small bounds used here (shuffles)
    return next_u64() % bound;
}

Vector gaussian_draw(RngStream& rng, const Matrix& cov_factor_lower) {
    const std::size_t n = cov_factor_lower.rows();
    Vector u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = rng.next_normal();
    Vector out(n);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c <= r; ++c) s += cov_factor_lower(r, c) * u[c];
        out[r] = s;
    }
    return out;
}

}  // namespace ckfnet
