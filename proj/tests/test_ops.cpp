#include <algorithm>

#include "doctest.h"
#include "pixcolor/nn.hpp"
#include "pixcolor/ops.hpp"
#include "support.hpp"

using namespace pixcolor;
using testing::random_tensor;

namespace {

// Direct same-padded convolution used as the oracle.
std::vector<double> naive_conv(const Tensor& x, const ConvSpec& s, const std::vector<double>& w,
                               const std::vector<double>* bias) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int oh = (h + s.stride - 1) / s.stride, ow = (wd + s.stride - 1) / s.stride;
  const int pad_h = std::max(0, (oh - 1) * s.stride + s.kernel_h - h) / 2;
  const int pad_w = std::max(0, (ow - 1) * s.stride + s.kernel_w - wd) / 2;
  std::vector<double> out(static_cast<std::size_t>(n) * s.out_channels * oh * ow, 0.0);
  auto in = x.data();
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < s.out_channels; ++o)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double acc = bias ? (*bias)[o] : 0.0;
          for (int i = 0; i < c; ++i)
            for (int ky = 0; ky < s.kernel_h; ++ky)
              for (int kx = 0; kx < s.kernel_w; ++kx) {
                const int sy = y * s.stride + ky - pad_h, sx = xx * s.stride + kx - pad_w;
                if (sy < 0 || sy >= h || sx < 0 || sx >= wd) continue;
                acc += w[((o * c + i) * s.kernel_h + ky) * s.kernel_w + kx] *
                       in[((b * c + i) * h + sy) * wd + sx];
              }
          out[((b * s.out_channels + o) * oh + y) * ow + xx] = acc;
        }
  return out;
}

}  // namespace

TEST_CASE("conv2d matches a direct convolution") {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(100 + trial);
    ConvSpec s;
    s.kernel_h = 1 + 2 * rng.below(4);
    s.kernel_w = 1 + rng.below(5);
    s.stride = 1 + rng.below(3);
    s.in_channels = 1 + rng.below(4);
    s.out_channels = 1 + rng.below(4);
    Tensor x = random_tensor({1 + rng.below(2), static_cast<std::size_t>(s.in_channels),
                              1 + rng.below(9), 1 + rng.below(9)},
                             rng, -1, 1, false);
    Tensor w = random_tensor(s.weight_shape(), rng, -1, 1, false);
    Tensor b = random_tensor({static_cast<std::size_t>(s.out_channels)}, rng, -1, 1, false);
    const std::vector<double> wv(w.data().begin(), w.data().end()), bv(b.data().begin(), b.data().end());
    const auto expect = naive_conv(x, s, wv, &bv);
    Tensor y = conv2d(x, s, w, b);
    REQUIRE(y.numel() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(y.data()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d same-padding extents are ceil(H / stride)") {
  for (int h : {1, 5, 7, 8, 64, 224}) {
    for (int stride : {1, 2, 3}) {
      ConvSpec s = conv_spec(3, stride, 1, 1);
      Tensor x({1, 1, static_cast<std::size_t>(h), 3});
      Tensor y = conv2d(x, s, Tensor(s.weight_shape()), Tensor());
      CHECK(y.dim(2) == static_cast<std::size_t>((h + stride - 1) / stride));
    }
  }
  CHECK(conv_out_extent(224, 2) == 112);
}

TEST_CASE("1x1 identity kernel reproduces the input") {
  Rng rng(3);
  ConvSpec s = conv_spec(1, 1, 3, 3);
  Tensor w(s.weight_shape());
  for (int c = 0; c < 3; ++c) w.data()[c * 3 + c] = 1.0;
  Tensor x = random_tensor({2, 3, 4, 5}, rng, -1, 1, false);
  Tensor y = conv2d(x, s, w, Tensor());
  CHECK(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
}

TEST_CASE("3x3 ones kernel on a constant image sums nine taps") {
  const double c = 2.5;
  ConvSpec s = conv_spec(3, 1, 1, 1);
  Tensor w(s.weight_shape(), 1.0);
  Tensor x({1, 1, 5, 6}, c);
  Tensor y = conv2d(x, s, w, Tensor());
  for (int r = 1; r < 4; ++r)
    for (int q = 1; q < 5; ++q) CHECK(y.data()[r * 6 + q] == 9 * c);
  CHECK(y.data()[0] == 4 * c);  // corner sees four taps
}

TEST_CASE("type-A mask ignores the current and later pixels") {
  Rng rng(4);
  ConvSpec s = conv_spec(5, 1, 2, 3);
  s.mask = MaskType::A;
  Tensor w = random_tensor(s.weight_shape(), rng, -1, 1, false);
  Tensor b = random_tensor({3}, rng, -1, 1, false);
  const int h = 6, wd = 5;
  Tensor x = random_tensor({1, 2, h, wd}, rng, -1, 1, false);
  const Tensor base = conv2d(x, s, w, b);
  for (int p = 0; p < h * wd; ++p) {
    Tensor xp = x.detach();
    for (int c = 0; c < 2; ++c)
      for (int q = p; q < h * wd; ++q) xp.data()[c * h * wd + q] += rng.uniform(-5, 5);
    const Tensor y = conv2d(xp, s, w, b);
    for (int o = 0; o < 3; ++o)
      for (int q = 0; q <= p; ++q) CHECK(y.data()[o * h * wd + q] == base.data()[o * h * wd + q]);
  }
}

TEST_CASE("subpixel mask connectivity") {
  // Oracle: centre tap keeps gi < go (A) or gi <= go (B); earlier taps kept;
  // later taps cut.
  for (MaskType type : {MaskType::A, MaskType::B}) {
    for (int period : {0, 4}) {
      ConvSpec s;
      s.kernel_h = s.kernel_w = 3;
      s.in_channels = 2;
      s.out_channels = 8;
      s.mask = type;
      s.mask_groups = 2;
      s.out_group_period = period;
      const auto mask = make_conv_mask(s);
      const int per = period ? period : s.out_channels;
      for (int o = 0; o < 8; ++o)
        for (int i = 0; i < 2; ++i)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int go = (o % per) * 2 / per, gi = i;
              const int tap = ky * 3 + kx;
              double expect = tap < 4 ? 1 : 0;
              if (tap == 4) expect = (type == MaskType::A ? gi < go : gi <= go) ? 1 : 0;
              CHECK(mask[((o * 2 + i) * 3 + ky) * 3 + kx] == expect);
            }
    }
  }
}

TEST_CASE("conv2d validation errors") {
  ConvSpec s = conv_spec(3, 1, 2, 2);
  CHECK_THROWS_AS(conv2d(Tensor({1, 3, 4, 4}), s, Tensor(s.weight_shape()), Tensor()), ShapeError);
  CHECK_THROWS_AS(conv2d(Tensor({1, 2, 4, 4}), s, Tensor({2, 2, 1, 1}), Tensor()), ShapeError);
  CHECK_THROWS_AS(conv2d(Tensor({1, 2, 4, 4}), s, Tensor(s.weight_shape()), Tensor({3})), ShapeError);
  CHECK_THROWS_AS(conv2d(Tensor({2, 4, 4}), s, Tensor(s.weight_shape()), Tensor()), ShapeError);
  ConvSpec bad = s;
  bad.stride = 0;
  CHECK_THROWS_AS(bad.validate(), ShapeError);
  ConvSpec even = conv_spec(4, 1, 2, 2);
  even.mask = MaskType::B;
  CHECK_THROWS_AS(even.validate(), ShapeError);
}

TEST_CASE("bilinear upsample examples") {
  SUBCASE("row [0, 1] to three samples") {
    Tensor x = Tensor::from_values({1, 1, 1, 2}, {0, 1});
    Tensor y = bilinear_upsample(x, 1, 3);
    CHECK(y.data()[0] == 0.0);
    CHECK(y.data()[1] == 0.5);
    CHECK(y.data()[2] == 1.0);
  }
  SUBCASE("constant stays constant") {
    Tensor y = bilinear_upsample(Tensor({1, 2, 3, 2}, 7.25), 9, 11);
    CHECK(y.dim(2) == 9);
    CHECK(y.dim(3) == 11);
    for (double v : y.data()) CHECK(v == 7.25);
  }
  SUBCASE("same size is identity") {
    Rng rng(9);
    Tensor x = random_tensor({2, 2, 3, 4}, rng, -1, 1, false);
    Tensor y = bilinear_upsample(x, 3, 4);
    CHECK(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
  }
  SUBCASE("corners are preserved and bounds respected") {
    Rng rng(10);
    Tensor x = random_tensor({1, 1, 4, 3}, rng, -3, 3, false);
    Tensor y = bilinear_upsample(x, 13, 10);
    const auto [lo, hi] = std::minmax_element(x.data().begin(), x.data().end());
    for (double v : y.data()) {
      CHECK(v >= *lo);
      CHECK(v <= *hi);
    }
    CHECK(y.data()[0] == x.data()[0]);
    CHECK(y.data()[y.numel() - 1] == x.data()[x.numel() - 1]);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(bilinear_upsample(Tensor({1, 1, 2, 2}), 0, 4), ShapeError);
    CHECK_THROWS_AS(bilinear_upsample(Tensor({1, 1, 2, 2}), 4, 0), ShapeError);
    CHECK_THROWS_AS(bilinear_upsample(Tensor({1, 1, 4, 4}), 2, 4), ShapeError);
  }
}

TEST_CASE("concat and narrow round trip") {
  Rng rng(11);
  Tensor a = random_tensor({2, 2, 3, 3}, rng, -1, 1, false), b = random_tensor({2, 3, 3, 3}, rng, -1, 1, false);
  Tensor c = concat_channels({a, b});
  CHECK(c.dim(1) == 5);
  Tensor back = narrow_channels(c, 2, 3);
  CHECK(std::equal(b.data().begin(), b.data().end(), back.data().begin()));
  CHECK_THROWS_AS(narrow_channels(c, 4, 2), ShapeError);
  CHECK_THROWS_AS(concat_channels({a, Tensor({1, 2, 3, 3})}), ShapeError);
}

TEST_CASE("scale_gradient is the identity forward") {
  Rng rng(12);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = scale_gradient(a, 0.1);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}
