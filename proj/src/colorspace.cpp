#include "pixcolor/colorspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pixcolor/ops.hpp"

namespace pixcolor {

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Source-axis weights for one output sample of a box filter.
struct BoxTap {
  int first;
  std::vector<double> weights;
};

std::vector<BoxTap> box_taps(int in, int out) {
  std::vector<BoxTap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double lo = o * scale, hi = (o + 1) * scale;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(in - 1, static_cast<int>(std::ceil(hi)) - 1);
    taps[o].first = first;
    for (int i = first; i <= last; ++i) {
      const double cover = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
      taps[o].weights.push_back(cover / scale);
    }
  }
  return taps;
}

}  // namespace

std::array<double, 3> rgb_to_ycc_pixel(double r, double g, double b) {
  return {0.299 * r + 0.587 * g + 0.114 * b,
          128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b,
          128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b};
}

std::array<double, 3> ycc_to_rgb_pixel(double y, double cb, double cr) {
  const double u = cb - 128.0, v = cr - 128.0;
  return {y + 1.402 * v, y - 0.344136 * u - 0.714136 * v, y + 1.772 * u};
}

YccImage rgb_to_ycc(const RgbImage& img) {
  YccImage out{Plane(img.width, img.height), Plane(img.width, img.height),
               Plane(img.width, img.height)};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      auto [l, cb, cr] = rgb_to_ycc_pixel(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
      out.y.at(x, y) = std::clamp(l, 0.0, 255.0);
      out.cb.at(x, y) = std::clamp(cb, 0.0, 255.0);
      out.cr.at(x, y) = std::clamp(cr, 0.0, 255.0);
    }
  }
  return out;
}

RgbImage combine_luma_chroma(const Plane& y, const Plane& cb, const Plane& cr) {
  if (y.width != cb.width || y.height != cb.height || y.width != cr.width ||
      y.height != cr.height) {
    throw std::invalid_argument("combine_luma_chroma: plane extents differ");
  }
  RgbImage out(y.width, y.height);
  for (int py = 0; py < y.height; ++py) {
    for (int px = 0; px < y.width; ++px) {
      const double l = std::clamp(y.at(px, py), 0.0, 255.0);
      auto rgb = ycc_to_rgb_pixel(l, cb.at(px, py), cr.at(px, py));
      // Out-of-gamut chroma is pulled toward grey just enough to fit, so the
      // luma survives instead of being clipped away.
      double t = 1.0;
      for (double v : rgb) {
        if (v > 255.0) t = std::min(t, (255.0 - l) / (v - l));
        if (v < 0.0) t = std::min(t, l / (l - v));
      }
      for (int c = 0; c < 3; ++c) out.at(px, py, c) = to_u8(l + t * (rgb[c] - l));
    }
  }
  return out;
}

RgbImage ycc_to_rgb(const YccImage& img) { return combine_luma_chroma(img.y, img.cb, img.cr); }

int quantize_chroma(double value) {
  const int bin = static_cast<int>(std::floor(value / 8.0));
  return std::clamp(bin, 0, kChromaBins - 1);
}

double dequantize_chroma(int bin) { return 8.0 * bin + 4.0; }

Plane area_resize(const Plane& src, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("area_resize: non-positive target");
  const auto tx = box_taps(src.width, out_w);
  const auto ty = box_taps(src.height, out_h);
  Plane rows(out_w, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < tx[x].weights.size(); ++k) {
        acc += tx[x].weights[k] * src.at(tx[x].first + static_cast<int>(k), y);
      }
      rows.at(x, y) = acc;
    }
  }
  Plane out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < ty[y].weights.size(); ++k) {
        acc += ty[y].weights[k] * rows.at(x, ty[y].first + static_cast<int>(k));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

std::array<int, 2> small_side_extent(int width, int height, int small_side) {
  if (small_side <= 0) throw std::invalid_argument("small side must be positive");
  if (width <= height) {
    int h = static_cast<int>(std::lround(static_cast<double>(height) * small_side / width));
    return {small_side, std::max(h, 1)};
  }
  int w = static_cast<int>(std::lround(static_cast<double>(width) * small_side / height));
  return {std::max(w, 1), small_side};
}

ChromaPlanes downsample_chroma(const YccImage& img, int target_small_side) {
  if (target_small_side <= 0) {
    throw std::invalid_argument("downsample_chroma: target must be positive");
  }
  if (target_small_side > std::min(img.width(), img.height())) {
    throw std::invalid_argument("downsample_chroma: target exceeds image side");
  }
  auto [w, h] = small_side_extent(img.width(), img.height(), target_small_side);
  return {area_resize(img.cb, w, h), area_resize(img.cr, w, h)};
}

ChromaGrid quantize_grid(const ChromaPlanes& planes) {
  ChromaGrid grid(planes.cr.width, planes.cr.height);
  for (std::size_t i = 0; i < grid.pixels(); ++i) {
    grid.cr[i] = static_cast<std::uint8_t>(quantize_chroma(planes.cr.values[i]));
    grid.cb[i] = static_cast<std::uint8_t>(quantize_chroma(planes.cb.values[i]));
  }
  return grid;
}

ChromaPlanes dequantize_grid(const ChromaGrid& grid) {
  ChromaPlanes out{Plane(grid.width, grid.height), Plane(grid.width, grid.height)};
  for (std::size_t i = 0; i < grid.pixels(); ++i) {
    out.cr.values[i] = dequantize_chroma(grid.cr[i]);
    out.cb.values[i] = dequantize_chroma(grid.cb[i]);
  }
  return out;
}

Plane bilinear_resize(const Plane& src, int out_w, int out_h) {
  Tensor t = Tensor::from_values(
      {1, 1, static_cast<std::size_t>(src.height), static_cast<std::size_t>(src.width)},
      src.values);
  Tensor up = bilinear_upsample(t, static_cast<std::size_t>(out_h), static_cast<std::size_t>(out_w));
  Plane out(out_w, out_h);
  std::copy(up.data().begin(), up.data().end(), out.values.begin());
  return out;
}

RgbImage chroma_bottleneck(const RgbImage& img, int small_side) {
  const YccImage ycc = rgb_to_ycc(img);
  const ChromaPlanes low = downsample_chroma(ycc, small_side);
  return combine_luma_chroma(ycc.y, bilinear_resize(low.cb, img.width, img.height),
                             bilinear_resize(low.cr, img.width, img.height));
}

RgbImage grayscale_replication(const RgbImage& img) {
  const YccImage ycc = rgb_to_ycc(img);
  RgbImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t v = to_u8(ycc.y.at(x, y));
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = v;
    }
  }
  return out;
}

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

std::array<double, 3> rgb_to_lab_pixel(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = srgb_to_linear(r8 / 255.0);
  const double g = srgb_to_linear(g8 / 255.0);
  const double b = srgb_to_linear(b8 / 255.0);
  // D65 reference white.
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b) / 1.00000;
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  const double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
  double a = 500.0 * (fx - fy);
  double bb = 200.0 * (fy - fz);
  // Neutral pixels land within rounding of the achromatic axis.
  if (r8 == g8 && g8 == b8) a = bb = 0.0;
  return {116.0 * fy - 16.0, a, bb};
}

LabPlanes rgb_to_lab(const RgbImage& img) {
  LabPlanes out{Plane(img.width, img.height), Plane(img.width, img.height),
                Plane(img.width, img.height)};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      auto [l, a, b] = rgb_to_lab_pixel(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
      out.l.at(x, y) = l;
      out.a.at(x, y) = a;
      out.b.at(x, y) = b;
    }
  }
  return out;
}

double psnr(const RgbImage& a, const RgbImage& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("psnr: image extents differ");
  }
  double se = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.pixels.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace pixcolor
