#pragma once

#include <complex>
#include <cstdint>

namespace wigneg {

// Philox4x32-10 counter-based generator.  The whole stream is a pure function
// of (seed, stream, counter), so any draw can be reproduced from its
// coordinates alone and independent streams never overlap.  Identical seeds
// give bit-identical sequences on every platform.
class PhiloxRng {
  public:
    explicit PhiloxRng(std::uint64_t seed, std::uint64_t stream = 0);

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Standard normal via Box-Muller (second value cached).
    double gaussian();
    // Real and imaginary parts are independent standard normals.
    std::complex<double> complex_gaussian();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

  private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::uint32_t block_[4] = {0, 0, 0, 0};
    int block_pos_ = 4;  // empty
    double cached_gaussian_ = 0.0;
    bool have_cached_gaussian_ = false;
};

}  // namespace wigneg
