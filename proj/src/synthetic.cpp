#include "pixcolor/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pixcolor/colorspace.hpp"
#include "pixcolor/rng.hpp"

namespace pixcolor {

namespace {

// Smooth value noise in [-1, 1] on a lattice of the given cell size.
class ValueNoise {
 public:
  ValueNoise(std::uint64_t seed, double cell) : seed_(seed), cell_(cell) {}

  double operator()(double x, double y) const {
    const double fx = x / cell_, fy = y / cell_;
    const auto ix = static_cast<std::int64_t>(std::floor(fx));
    const auto iy = static_cast<std::int64_t>(std::floor(fy));
    const double tx = smooth(fx - ix), ty = smooth(fy - iy);
    const double a = lattice(ix, iy), b = lattice(ix + 1, iy);
    const double c = lattice(ix, iy + 1), d = lattice(ix + 1, iy + 1);
    return (a + (b - a) * tx) * (1 - ty) + (c + (d - c) * tx) * ty;
  }

 private:
  static double smooth(double t) { return t * t * (3 - 2 * t); }
  double lattice(std::int64_t x, std::int64_t y) const {
    const std::uint64_t h = derive_seed(seed_, static_cast<std::uint64_t>(x) * 73856093ULL ^
                                                   static_cast<std::uint64_t>(y) * 19349663ULL);
    return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
  }
  std::uint64_t seed_;
  double cell_;
};

struct Tint {
  double cb;
  double cr;
};

struct Blob {
  double cx, cy, rx, ry;
  double y;
  Tint tint;
  bool box;
};

}  // namespace

RgbImage synthetic_scene(std::uint64_t seed, int width, int height) {
  Rng rng(seed);
  const double s = std::min(width, height);
  const double horizon = height * rng.uniform(0.35, 0.65);
  const double wave_amp = s * rng.uniform(0.0, 0.06);
  const double wave_freq = rng.uniform(1.0, 3.0) * 2.0 * 3.14159265358979 / width;
  const double wave_phase = rng.uniform(0.0, 6.283);

  const bool sunset = rng.uniform() < 0.25;
  const Tint sky = sunset ? Tint{rng.uniform(95, 110), rng.uniform(160, 180)}
                          : Tint{rng.uniform(155, 175), rng.uniform(95, 112)};
  const double sky_top = sunset ? rng.uniform(90, 130) : rng.uniform(120, 160);
  const double sky_bottom = sky_top + rng.uniform(40, 80);

  const bool sand = rng.uniform() < 0.35;
  const Tint ground = sand ? Tint{rng.uniform(100, 112), rng.uniform(138, 150)}
                           : Tint{rng.uniform(92, 108), rng.uniform(100, 115)};
  const double ground_y = sand ? rng.uniform(160, 190) : rng.uniform(70, 105);
  const double ground_texture = sand ? 8.0 : 30.0;

  static constexpr Tint kPalette[] = {{100, 200}, {60, 150}, {170, 170}, {128, 128}, {200, 90}};
  const int n_blobs = 1 + static_cast<int>(rng.below(3));
  std::vector<Blob> blobs;
  for (int i = 0; i < n_blobs; ++i) {
    Blob b;
    b.cx = rng.uniform(0.1, 0.9) * width;
    b.cy = rng.uniform(0.3, 0.9) * height;
    b.rx = rng.uniform(0.08, 0.22) * s;
    b.ry = rng.uniform(0.08, 0.22) * s;
    b.y = rng.uniform(60, 210);
    b.tint = kPalette[rng.below(std::size(kPalette))];
    b.box = rng.uniform() < 0.4;
    blobs.push_back(b);
  }

  const ValueNoise coarse(derive_seed(seed, 1), s / 4.0);
  const ValueNoise fine(derive_seed(seed, 2), std::max(1.5, s / 24.0));
  const ValueNoise tint_noise(derive_seed(seed, 3), s / 3.0);

  RgbImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double edge = horizon + wave_amp * std::sin(wave_freq * x + wave_phase);
      double Y, cb, cr;
      if (y < edge) {
        const double t = y / std::max(1.0, edge);
        Y = sky_top + (sky_bottom - sky_top) * t + 6.0 * coarse(x, y);
        cb = sky.cb;
        cr = sky.cr;
      } else {
        Y = ground_y + ground_texture * fine(x, y) + 10.0 * coarse(x, y);
        cb = ground.cb;
        cr = ground.cr;
      }
      for (const Blob& b : blobs) {
        const double dx = (x + 0.5 - b.cx) / b.rx, dy = (y + 0.5 - b.cy) / b.ry;
        const bool inside = b.box ? std::max(std::abs(dx), std::abs(dy)) <= 1.0
                                  : dx * dx + dy * dy <= 1.0;
        if (inside) {
          Y = b.y + 8.0 * coarse(x + 17, y + 5);
          cb = b.tint.cb;
          cr = b.tint.cr;
        }
      }
      cb += 4.0 * tint_noise(x, y);
      cr += 4.0 * tint_noise(y, x);
      const auto rgb = ycc_to_rgb_pixel(std::clamp(Y, 0.0, 255.0), cb, cr);
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(rgb[c]), 0L, 255L));
      }
    }
  }
  return img;
}

std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& dir,
                                                          const CorpusSpec& spec) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (int i = 0; i < spec.count; ++i) {
    RgbImage img = synthetic_scene(derive_seed(spec.seed, static_cast<std::uint64_t>(i)),
                                   spec.width, spec.height);
    if (spec.gray_every > 0 && i % spec.gray_every == spec.gray_every - 1) {
      img = grayscale_replication(img);
    }
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04d.png", spec.prefix.c_str(), i);
    paths.push_back(dir / name);
    write_png(paths.back(), img);
  }
  return paths;
}

}  // namespace pixcolor
