#pragma once

#include <cstdint>
#include <vector>

#include "catp/matrix.hpp"

namespace catp {

// SplitMix64 generator. Pure integer state update, so the u64 stream is
// bit-identical for a given seed on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform draw in the half-open interval (0, 1]; never returns 0, so it is
  // safe as the log argument in Box-Muller.
  double next_unit_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Gaussian(0, stddev) samples via Box-Muller over the SplitMix64 stream.
// The stream is consumed in pairs even when stddev == 0, so the values drawn
// for a given seed do not depend on the requested scale.
Matrix gaussian_init(Rng& rng, std::size_t rows, std::size_t cols, double stddev);

std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double stddev);

}  // namespace catp
