#include "catp/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "catp/rng.hpp"

namespace catp {

namespace {

// Reads the next header token, skipping whitespace and '#' comment lines.
std::string next_token(std::istream& in, const std::string& path) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == EOF) throw IoError("truncated netpbm header: " + path);
  std::string token;
  while (ch != EOF && !std::isspace(ch)) {
    token.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  return token;
}

std::size_t header_number(std::istream& in, const std::string& path) {
  const std::string token = next_token(in, path);
  std::size_t value = 0;
  for (const char ch : token) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      throw IoError("bad number '" + token + "' in netpbm header: " + path);
    }
    value = value * 10 + static_cast<std::size_t>(ch - '0');
  }
  if (token.empty()) throw IoError("bad netpbm header: " + path);
  return value;
}

}  // namespace

Image load_netpbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);

  const std::string magic = next_token(in, path);
  std::size_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw IoError("unsupported image format '" + magic + "' (want P5 or P6): " + path);
  }

  Image image;
  image.width = header_number(in, path);
  image.height = header_number(in, path);
  image.channels = channels;
  const std::size_t maxval = header_number(in, path);
  if (image.width == 0 || image.height == 0) {
    throw IoError("netpbm image has zero dimension: " + path);
  }
  if (maxval == 0 || maxval > 255) {
    throw IoError("netpbm max value must be in 1..255: " + path);
  }

  const std::size_t count = image.height * image.width * channels;
  std::vector<unsigned char> raw(count);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count))) {
    throw IoError("netpbm payload shorter than header promises: " + path);
  }
  image.pixels.resize(count);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < count; ++i) {
    image.pixels[i] = static_cast<double>(raw[i]) * scale;
  }
  return image;
}

void save_pgm(const std::string& path, const Matrix& values) {
  if (values.empty()) throw std::invalid_argument("save_pgm: empty raster");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create image: " + path);
  out << "P5\n" << values.cols() << " " << values.rows() << "\n255\n";
  std::vector<unsigned char> raw;
  raw.reserve(values.size());
  for (const double value : values.data()) {
    const double clamped = std::clamp(value, 0.0, 1.0);
    raw.push_back(static_cast<unsigned char>(std::lround(255.0 * clamped)));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path);
}

double compute_mae(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
    throw std::invalid_argument("compute_mae: image shapes differ");
  }
  if (a.pixels.empty()) throw std::invalid_argument("compute_mae: empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    sum += std::abs(a.pixels[i] - b.pixels[i]);
  }
  return sum / static_cast<double>(a.pixels.size());
}

Image synthetic_image(std::size_t height, std::size_t width, std::size_t channels,
                      std::uint64_t seed) {
  Image image;
  image.height = height;
  image.width = width;
  image.channels = channels;
  image.pixels.resize(height * width * channels);
  Rng rng(seed);
  for (double& pixel : image.pixels) pixel = rng.next_unit_open();
  return image;
}

Image convert_channels(const Image& image, std::size_t target_channels) {
  if (image.channels == target_channels) return image;
  Image out;
  out.height = image.height;
  out.width = image.width;
  out.channels = target_channels;
  out.pixels.resize(image.height * image.width * target_channels);
  const bool widen = image.channels < target_channels;
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      double mean = 0.0;
      for (std::size_t c = 0; c < image.channels; ++c) mean += image.at(y, x, c);
      mean /= static_cast<double>(image.channels);
      for (std::size_t c = 0; c < target_channels; ++c) {
        out.at(y, x, c) = widen && c < image.channels ? image.at(y, x, c) : mean;
      }
    }
  }
  return out;
}

}  // namespace catp
