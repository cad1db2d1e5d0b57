#pragma once

#include <string>
#include <vector>

#include "fidlens/types.hpp"

namespace fidlens {

// Interleaved RGB, row-major, channel values in [0, 1].
struct RgbImage {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  std::vector<float> pixels;

  RgbImage() = default;
  RgbImage(Eigen::Index h, Eigen::Index w)
      : height(h), width(w), pixels(static_cast<std::size_t>(h * w * 3), 0.f) {}

  float& at(Eigen::Index y, Eigen::Index x, int c) {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
  float at(Eigen::Index y, Eigen::Index x, int c) const {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
};

// Binary 8-bit PPM (P6).
RgbImage ReadPpm(const std::string& path);
void WritePpm(const std::string& path, const RgbImage& image);

// Grayscale portable float map ("Pf"), little-endian, rows stored bottom to
// top as the format prescribes. Used for raw 32-bit heatmap grids.
Grid ReadPfm(const std::string& path);
void WritePfm(const std::string& path, const Grid& grid);

}  // namespace fidlens
