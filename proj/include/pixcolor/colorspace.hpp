#pragma once

#include <array>
#include <cstdint>

#include "pixcolor/image.hpp"

namespace pixcolor {

// Full-range (JPEG) BT.601.
YccImage rgb_to_ycc(const RgbImage& img);
/// Rounds to nearest and clamps to [0, 255].
RgbImage ycc_to_rgb(const YccImage& img);

std::array<double, 3> rgb_to_ycc_pixel(double r, double g, double b);
std::array<double, 3> ycc_to_rgb_pixel(double y, double cb, double cr);

/// 32 uniform bins of width 8 over [0, 256).
int quantize_chroma(double value);
/// Bin centre, 8 * bin + 4.
double dequantize_chroma(int bin);

/// Box-filter resize: each output sample is the area-weighted mean of the
/// source samples its footprint covers (fractional coverage allowed).
Plane area_resize(const Plane& src, int out_w, int out_h);

/// Output extents for shrinking (w, h) so the smaller side equals `small_side`
/// while keeping the aspect ratio (larger side rounded to nearest, >= 1).
std::array<int, 2> small_side_extent(int width, int height, int small_side);

struct ChromaPlanes {
  Plane cb;
  Plane cr;
};

/// Area-averaged chroma at reduced resolution, smallest side = target.
ChromaPlanes downsample_chroma(const YccImage& img, int target_small_side);

/// quantize(downsample_chroma(img, side)).
ChromaGrid quantize_grid(const ChromaPlanes& planes);

/// Dequantized grid planes (bin centres) at grid resolution.
ChromaPlanes dequantize_grid(const ChromaGrid& grid);

/// Corner-aligned bilinear enlargement of a plane.
Plane bilinear_resize(const Plane& src, int out_w, int out_h);

/// Replaces the chroma of `img` with `small_side` area-downsampled chroma,
/// bilinearly upsampled back, keeping the original luminance.
RgbImage chroma_bottleneck(const RgbImage& img, int small_side);

/// Luminance replicated into all three channels.
RgbImage grayscale_replication(const RgbImage& img);

/// Recombines a luminance plane with full-resolution chroma planes. Pixels
/// whose chroma falls outside the RGB gamut have it scaled toward neutral
/// until they fit, which keeps their luma.
RgbImage combine_luma_chroma(const Plane& y, const Plane& cb, const Plane& cr);

struct LabPlanes {
  Plane l;
  Plane a;
  Plane b;
};

/// sRGB (D65) -> linear -> XYZ -> CIELab.
std::array<double, 3> rgb_to_lab_pixel(std::uint8_t r, std::uint8_t g, std::uint8_t b);
LabPlanes rgb_to_lab(const RgbImage& img);

/// PSNR in dB over all RGB samples (infinite for identical images).
double psnr(const RgbImage& a, const RgbImage& b);

}  // namespace pixcolor
