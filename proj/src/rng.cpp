#include "wigneg/rng.hpp"

#include <cmath>

namespace wigneg {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;  // sqrt(3) - 1

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxRng::PhiloxRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {}

void PhiloxRng::refill() {
    // Counter block: (counter low/high, stream low/high); key from the seed.
    std::uint32_t x[4] = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32),
    };
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, x[0], hi0, lo0);
        mulhilo(kPhiloxM1, x[2], hi1, lo1);
        const std::uint32_t y0 = hi1 ^ x[1] ^ k0;
        const std::uint32_t y1 = lo1;
        const std::uint32_t y2 = hi0 ^ x[3] ^ k1;
        const std::uint32_t y3 = lo0;
        x[0] = y0;
        x[1] = y1;
        x[2] = y2;
        x[3] = y3;
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    for (int i = 0; i < 4; ++i) block_[i] = x[i];
    block_pos_ = 0;
    ++counter_;
}

double PhiloxRng::uniform() {
    if (block_pos_ > 2) refill();
    const std::uint64_t hi = block_[block_pos_++];
    const std::uint64_t lo = block_[block_pos_++];
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;  // 53 bits
    return static_cast<double>(bits) * 0x1.0p-53;
}

double PhiloxRng::gaussian() {
    if (have_cached_gaussian_) {
        have_cached_gaussian_ = false;
        return cached_gaussian_;
    }
    // Box-Muller; shift u1 into (0, 1] so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_gaussian_ = radius * std::sin(angle);
    have_cached_gaussian_ = true;
    return radius * std::cos(angle);
}

std::complex<double> PhiloxRng::complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return {re, im};
}

}  // namespace wigneg
