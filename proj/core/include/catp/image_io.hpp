#pragma once

#include <cstdint>
#include <string>

#include "catp/errors.hpp"
#include "catp/image.hpp"
#include "catp/matrix.hpp"

namespace catp {

// Binary netpbm rasters: P5 (gray) or P6 (color), max value up to 255.
// Samples are mapped to [0, 1]. Throws IoError on malformed input.
Image load_netpbm(const std::string& path);

// Writes a P5 file with maxval 255; pixel = round(255 * clamp(v, 0, 1)).
void save_pgm(const std::string& path, const Matrix& values);

// Mean absolute difference over all samples, in [0, 1] for [0, 1] inputs.
// Throws std::invalid_argument when shapes differ.
double compute_mae(const Image& a, const Image& b);

// Deterministic uniform noise raster, for runs without an input image.
Image synthetic_image(std::size_t height, std::size_t width, std::size_t channels,
                      std::uint64_t seed);

}  // namespace catp
