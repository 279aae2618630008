#pragma once

#include <cstddef>
#include <vector>

namespace catp {

// Row-major H x W x channels raster with values in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
};

// Replicates gray to color or averages color down to gray so the raster
// matches the channel count the patch projection was built for.
Image convert_channels(const Image& image, std::size_t target_channels);

}  // namespace catp
