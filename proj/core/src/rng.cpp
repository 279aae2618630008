#include "catp/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace catp {

std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double stddev) {
  if (stddev < 0.0) {
    throw std::invalid_argument("gaussian_vector: stddev must be >= 0");
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; i += 2) {
    const double u1 = rng.next_unit_open();
    const double u2 = rng.next_unit_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i] = stddev * (radius * std::cos(angle));
    if (i + 1 < n) out[i + 1] = stddev * (radius * std::sin(angle));
  }
  return out;
}

Matrix gaussian_init(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  Matrix m(rows, cols);
  m.data() = gaussian_vector(rng, rows * cols, stddev);
  return m;
}

}  // namespace catp
