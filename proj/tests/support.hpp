#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pixcolor/image.hpp"
#include "pixcolor/rng.hpp"
#include "pixcolor/tensor.hpp"

namespace testing {

using pixcolor::Rng;
using pixcolor::Shape;
using pixcolor::Tensor;

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = true) {
  std::vector<double> v(pixcolor::shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_values(shape, std::move(v), requires_grad);
}

// Values bounded away from zero, for ops with a kink at the origin.
inline Tensor random_away_from_zero(const Shape& shape, Rng& rng, double margin = 0.05) {
  std::vector<double> v(pixcolor::shape_numel(shape));
  for (auto& x : v) {
    const double m = rng.uniform(margin, 1.0);
    x = rng.uniform() < 0.5 ? -m : m;
  }
  return Tensor::from_values(shape, std::move(v), true);
}

// Largest relative error between the analytic gradients of `inputs` and
// central differences of f, with |a - n| / max(|a|, |n|, floor).
inline double gradient_error(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                             double step = 1e-3, double floor = 1e-6) {
  for (auto& t : inputs) t.zero_grad();
  f().backward();
  double worst = 0.0;
  for (auto& t : inputs) {
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      double plus, minus;
      {
        pixcolor::NoGradGuard guard;
        data[i] = saved + step;
        plus = f().item();
        data[i] = saved - step;
        minus = f().item();
      }
      data[i] = saved;
      const double numeric = (plus - minus) / (2 * step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pixcolor_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline pixcolor::RgbImage random_rgb(int w, int h, Rng& rng) {
  pixcolor::RgbImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

inline pixcolor::RgbImage solid_rgb(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  pixcolor::RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
  return img;
}

}  // namespace testing
