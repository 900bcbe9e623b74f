#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace pixcolor {

/// 8-bit RGB, interleaved, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool operator==(const RgbImage&) const = default;
};

/// Single real-valued channel, row-major.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return values.size(); }
  bool operator==(const Plane&) const = default;
};

/// Full-range luminance and chroma planes, all in [0, 255].
struct YccImage {
  Plane y;
  Plane cb;
  Plane cr;

  int width() const { return y.width; }
  int height() const { return y.height; }
};

inline constexpr int kChromaBins = 32;

/// Low-resolution discretised chroma: the latent the autoregressive model
/// works on. Bin indices live in [0, kChromaBins).
struct ChromaGrid {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> cr;
  std::vector<std::uint8_t> cb;

  ChromaGrid() = default;
  ChromaGrid(int w, int h)
      : width(w),
        height(h),
        cr(static_cast<std::size_t>(w) * h, 0),
        cb(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t pixels() const { return cr.size(); }
  /// Subchannel 0 is Cr, 1 is Cb.
  std::vector<std::uint8_t>& channel(int s) { return s == 0 ? cr : cb; }
  const std::vector<std::uint8_t>& channel(int s) const { return s == 0 ? cr : cb; }
  bool operator==(const ChromaGrid&) const = default;
};

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decodes any 8/16-bit PNG (grey, grey+alpha, palette, RGB, RGBA) to RGB.
RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& img);

}  // namespace pixcolor
