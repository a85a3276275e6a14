#pragma once

#include <string>
#include <vector>

namespace pinf::render {

/// RGB image with channel values in [0, 1], row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0.0) {}
  double& at(int x, int y, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int x, int y, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// 8-bit PNG; values are clamped and rounded.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);
/// ASCII PPM (P3), 8-bit.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

/// Peak signal-to-noise ratio in dB for unit peak; infinity for equal images.
double psnr(const Image& a, const Image& b);

}  // namespace pinf::render
