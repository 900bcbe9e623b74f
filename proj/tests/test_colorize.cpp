#include <cstdlib>

#include "doctest.h"
#include "pixcolor/colorize.hpp"
#include "pixcolor/colorspace.hpp"
#include "pixcolor/synthetic.hpp"
#include "support.hpp"

using namespace pixcolor;

namespace {

struct Models {
  ChromaModel chroma{ConditioningConfig{}, [] {
                       PixelCnnConfig c;
                       c.gated_blocks = 2;
                       return c;
                     }(),
                     41};
  RefinementNet refine{RefinementConfig{}, 42};
};

Models& models() {
  static Models m;
  return m;
}

int max_luma_gap(const RgbImage& a, const RgbImage& b) {
  const YccImage ya = rgb_to_ycc(a), yb = rgb_to_ycc(b);
  double worst = 0;
  for (std::size_t i = 0; i < ya.y.values.size(); ++i) worst = std::max(worst, std::abs(ya.y.values[i] - yb.y.values[i]));
  return static_cast<int>(std::ceil(worst));
}

}  // namespace

TEST_CASE("edge padding and cropping") {
  Plane p(2, 2);
  p.values = {1, 2, 3, 4};
  const Plane padded = pad_edge(p, 4, 3);
  CHECK(padded.values == std::vector<double>{1, 2, 2, 2, 3, 4, 4, 4, 3, 4, 4, 4});
  CHECK(crop_plane(padded, 2, 2) == p);
}

TEST_CASE("worker thread count") {
  CHECK(worker_threads(3) == 3);
  ::setenv("PIXCOLOR_THREADS", "2", 1);
  CHECK(worker_threads(0) == 2);
  ::setenv("PIXCOLOR_THREADS", "zero", 1);
  CHECK(worker_threads(0) >= 1);
  ::unsetenv("PIXCOLOR_THREADS");
  CHECK(worker_threads(0) >= 1);
}

TEST_CASE("one colorization per seed at the input size") {
  auto& m = models();
  const RgbImage input = synthetic_scene(3, 72, 56);
  ColorizeOptions opts;
  opts.seeds = {5, 1, 9};
  const auto out = colorize(m.chroma, m.refine, input, opts);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out[i].seed == opts.seeds[i]);
    CHECK(out[i].refined.width == 72);
    CHECK(out[i].refined.height == 56);
    CHECK(out[i].unrefined.width == 72);
    CHECK(out[i].unrefined.height == 56);
    // Smaller side 56 -> working 64, padded width 83 -> 88, grid 11 x 8.
    CHECK(out[i].grid.width == 11);
    CHECK(out[i].grid.height == 8);
    CHECK(max_luma_gap(out[i].refined, input) <= 2);
    CHECK(max_luma_gap(out[i].unrefined, input) <= 2);
  }
  CHECK(out[0].grid != out[1].grid);
}

TEST_CASE("portrait, landscape and grey inputs") {
  auto& m = models();
  ColorizeOptions opts;
  opts.seeds = {1};
  for (auto [w, h] : {std::pair{40, 100}, {100, 40}, {64, 64}, {13, 9}}) {
    const RgbImage input = grayscale_replication(synthetic_scene(w * h, w, h));
    const auto out = colorize(m.chroma, m.refine, input, opts);
    CHECK(out[0].refined.width == w);
    CHECK(out[0].refined.height == h);
    CHECK(max_luma_gap(out[0].refined, input) <= 2);
  }
}

TEST_CASE("colorization is reproducible and thread-count independent") {
  auto& m = models();
  const RgbImage input = synthetic_scene(4, 64, 64);
  ColorizeOptions one, many;
  one.threads = 1;
  many.threads = 3;
  const auto a = colorize(m.chroma, m.refine, input, one);
  const auto b = colorize(m.chroma, m.refine, input, many);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].grid == b[i].grid);
    CHECK(a[i].refined == b[i].refined);
    CHECK(a[i].unrefined == b[i].unrefined);
    CHECK(a[i].log_likelihood == b[i].log_likelihood);
  }
}

TEST_CASE("temperature 0 gives the same output for every seed") {
  auto& m = models();
  ColorizeOptions opts;
  opts.temperature = 0.0;
  const auto out = colorize(m.chroma, m.refine, synthetic_scene(6, 64, 64), opts);
  CHECK(out[0].refined == out[1].refined);
  CHECK(out[1].refined == out[2].refined);
}

TEST_CASE("colorize argument errors") {
  auto& m = models();
  ColorizeOptions opts;
  CHECK_THROWS(colorize(m.chroma, m.refine, RgbImage(), opts));
  opts.seeds.clear();
  CHECK_THROWS(colorize(m.chroma, m.refine, synthetic_scene(1, 32, 32), opts));
  ColorizeOptions cold;
  cold.temperature = -1;
  CHECK_THROWS(colorize(m.chroma, m.refine, synthetic_scene(1, 32, 32), cold));
}
