#include "pixcolor/ops.hpp"

// Small products would otherwise take Eigen's coefficient-based path, whose
// packet/scalar split follows the buffer address. That made results depend
// on where malloc put the data.
#define EIGEN_GEMM_TO_COEFFBASED_THRESHOLD 0
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pixcolor {

using detail::grad_of;
using detail::make_result;
using detail::Node;

namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void require_rank4(const Tensor& x, const char* op) {
  if (x.rank() != 4) {
    throw ShapeError(std::string(op) + ": expected NCHW tensor, got " +
                     shape_str(x.shape()));
  }
}

template <class F, class D>
Tensor unary(const Tensor& x, F&& f, D&& dfdx) {
  std::vector<double> out(x.numel());
  auto xs = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xs[i]);
  return make_result(x.shape(), std::move(out), {x},
                     [x, dfdx](Node& self) {
                       double* gx = grad_of(x);
                       auto xs = x.data();
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                         gx[i] += self.grad[i] * dfdx(xs[i], self.value[i]);
                       }
                     });
}

double sigmoid_scalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

void ConvSpec::validate() const {
  if (stride < 1) throw ShapeError("conv: stride must be >= 1");
  if (kernel_h < 1 || kernel_w < 1 || in_channels < 1 || out_channels < 1) {
    throw ShapeError("conv: kernel and channel extents must be positive");
  }
  if (mask != MaskType::None) {
    if (kernel_h % 2 == 0 || kernel_w % 2 == 0) {
      throw ShapeError("conv: masked kernels need odd extents");
    }
    int period = out_group_period ? out_group_period : out_channels;
    if (mask_groups < 1 || in_channels % mask_groups != 0 ||
        period % mask_groups != 0 || out_channels % period != 0) {
      throw ShapeError("conv: channel counts not divisible into mask groups");
    }
  }
}

std::vector<double> make_conv_mask(const ConvSpec& spec) {
  spec.validate();
  const int kh = spec.kernel_h, kw = spec.kernel_w;
  std::vector<double> mask(shape_numel(spec.weight_shape()), 1.0);
  if (spec.mask == MaskType::None) return mask;
  const int cy = kh / 2, cx = kw / 2;
  const int groups = spec.mask_groups;
  const int period = spec.out_group_period ? spec.out_group_period : spec.out_channels;
  for (int o = 0; o < spec.out_channels; ++o) {
    const int go = (o % period) * groups / period;
    for (int i = 0; i < spec.in_channels; ++i) {
      const int gi = i * groups / spec.in_channels;
      for (int y = 0; y < kh; ++y) {
        for (int x = 0; x < kw; ++x) {
          bool keep;
          if (y < cy || (y == cy && x < cx)) {
            keep = true;
          } else if (y == cy && x == cx) {
            keep = spec.mask == MaskType::A ? gi < go : gi <= go;
          } else {
            keep = false;
          }
          if (!keep) mask[((o * spec.in_channels + i) * kh + y) * kw + x] = 0.0;
        }
      }
    }
  }
  return mask;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto as = a.data(), bs = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = as[i] + bs[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](Node& self) {
    for (double* g : {grad_of(a), grad_of(b)}) {
      if (!g) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto as = a.data(), bs = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = as[i] - bs[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](Node& self) {
    if (double* g = grad_of(a)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = grad_of(b)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  auto as = a.data(), bs = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = as[i] * bs[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](Node& self) {
    auto as = a.data(), bs = b.data();
    if (double* g = grad_of(a)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bs[i];
    }
    if (double* g = grad_of(b)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * as[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      a, [offset](double v) { return v + offset; },
      [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor abs(const Tensor& x) {
  return unary(
      x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Tensor gated_activation(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "gated_activation");
  const std::size_t n = a.numel();
  std::vector<double> ta(n), sb(n), out(n);
  auto as = a.data(), bs = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    ta[i] = std::tanh(as[i]);
    sb[i] = sigmoid_scalar(bs[i]);
    out[i] = ta[i] * sb[i];
  }
  return make_result(
      a.shape(), std::move(out), {a, b},
      [a, b, ta = std::move(ta), sb = std::move(sb)](Node& self) {
        if (double* g = grad_of(a)) {
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            g[i] += self.grad[i] * (1.0 - ta[i] * ta[i]) * sb[i];
          }
        }
        if (double* g = grad_of(b)) {
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            g[i] += self.grad[i] * ta[i] * sb[i] * (1.0 - sb[i]);
          }
        }
      });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result({1}, {s}, {x}, [x](Node& self) {
    double* g = grad_of(x);
    for (std::size_t i = 0; i < x.numel(); ++i) g[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  return mean(abs(sub(pred, target)));
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(std::move(shape), std::move(out), {x}, [x](Node& self) {
    double* g = grad_of(x);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  for (auto& p : parts) require_rank4(p, "concat_channels");
  const std::size_t n = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
  std::size_t channels = 0;
  for (auto& p : parts) {
    if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w) {
      throw ShapeError("concat_channels: mismatched N/H/W " + shape_str(p.shape()) +
                       " vs " + shape_str(parts[0].shape()));
    }
    channels += p.dim(1);
  }
  const std::size_t hw = h * w;
  std::vector<double> out(n * channels * hw);
  std::size_t offset = 0;
  for (auto& p : parts) {
    const std::size_t c = p.dim(1);
    auto src = p.data();
    for (std::size_t b = 0; b < n; ++b) {
      std::copy_n(src.begin() + b * c * hw, c * hw,
                  out.begin() + (b * channels + offset) * hw);
    }
    offset += c;
  }
  return make_result({n, channels, h, w}, std::move(out), parts,
                     [parts, n, channels, hw](Node& self) {
                       std::size_t offset = 0;
                       for (auto& p : parts) {
                         const std::size_t c = p.dim(1);
                         if (double* g = grad_of(p)) {
                           for (std::size_t b = 0; b < n; ++b) {
                             const double* src = self.grad.data() + (b * channels + offset) * hw;
                             double* dst = g + b * c * hw;
                             for (std::size_t i = 0; i < c * hw; ++i) dst[i] += src[i];
                           }
                         }
                         offset += c;
                       }
                     });
}

Tensor narrow_channels(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank4(x, "narrow_channels");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (begin + count > c || count == 0) {
    throw ShapeError("narrow_channels: range out of bounds for " + shape_str(x.shape()));
  }
  std::vector<double> out(n * count * hw);
  auto src = x.data();
  for (std::size_t b = 0; b < n; ++b) {
    std::copy_n(src.begin() + (b * c + begin) * hw, count * hw,
                out.begin() + b * count * hw);
  }
  return make_result({n, count, x.dim(2), x.dim(3)}, std::move(out), {x},
                     [x, n, c, hw, begin, count](Node& self) {
                       double* g = grad_of(x);
                       for (std::size_t b = 0; b < n; ++b) {
                         const double* src = self.grad.data() + b * count * hw;
                         double* dst = g + (b * c + begin) * hw;
                         for (std::size_t i = 0; i < count * hw; ++i) dst[i] += src[i];
                       }
                     });
}

namespace {

struct ConvGeometry {
  std::size_t channels, height, width, out_h, out_w;
  int kh, kw, stride, pad_top, pad_left;
  std::size_t patch() const { return channels * kh * kw; }
  std::size_t positions() const { return out_h * out_w; }
  bool direct() const {
    return kh == 1 && kw == 1 && stride == 1 && pad_top == 0 && pad_left == 0;
  }
};

ConvGeometry conv_geometry(const Tensor& input, const ConvSpec& spec) {
  ConvGeometry g{};
  g.channels = input.dim(1);
  g.height = input.dim(2);
  g.width = input.dim(3);
  g.kh = spec.kernel_h;
  g.kw = spec.kernel_w;
  g.stride = spec.stride;
  g.out_h = conv_out_extent(g.height, spec.stride);
  g.out_w = conv_out_extent(g.width, spec.stride);
  auto pad_total = [](std::size_t in, std::size_t out, int k, int s) {
    long total = static_cast<long>((out - 1) * s + k) - static_cast<long>(in);
    return static_cast<int>(std::max(total, 0L));
  };
  g.pad_top = pad_total(g.height, g.out_h, g.kh, g.stride) / 2;
  g.pad_left = pad_total(g.width, g.out_w, g.kw, g.stride) / 2;
  return g;
}

void im2col(const double* img, const ConvGeometry& g, double* cols) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* plane = img + c * g.height * g.width;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        double* row = cols + ((c * g.kh + ky) * g.kw + kx) * positions;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long y = static_cast<long>(oy) * g.stride - g.pad_top + ky;
          double* dst = row + oy * g.out_w;
          if (y < 0 || y >= static_cast<long>(g.height)) {
            std::fill_n(dst, g.out_w, 0.0);
            continue;
          }
          const double* src = plane + y * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long x = static_cast<long>(ox) * g.stride - g.pad_left + kx;
            dst[ox] = (x < 0 || x >= static_cast<long>(g.width)) ? 0.0 : src[x];
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeometry& g, double* img) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* plane = img + c * g.height * g.width;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const double* row = cols + ((c * g.kh + ky) * g.kw + kx) * positions;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long y = static_cast<long>(oy) * g.stride - g.pad_top + ky;
          if (y < 0 || y >= static_cast<long>(g.height)) continue;
          const double* src = row + oy * g.out_w;
          double* dst = plane + y * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long x = static_cast<long>(ox) * g.stride - g.pad_left + kx;
            if (x >= 0 && x < static_cast<long>(g.width)) dst[x] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const ConvSpec& spec, const Tensor& weight,
              const Tensor& bias) {
  spec.validate();
  require_rank4(input, "conv2d");
  if (input.dim(1) != static_cast<std::size_t>(spec.in_channels)) {
    throw ShapeError("conv2d: input has " + std::to_string(input.dim(1)) +
                     " channels, spec expects " + std::to_string(spec.in_channels));
  }
  if (weight.shape() != spec.weight_shape()) {
    throw ShapeError("conv2d: weight shape " + shape_str(weight.shape()) +
                     " does not match spec " + shape_str(spec.weight_shape()));
  }
  if (bias.defined() && bias.shape() != Shape{static_cast<std::size_t>(spec.out_channels)}) {
    throw ShapeError("conv2d: bias shape " + shape_str(bias.shape()) +
                     " does not match out_channels " + std::to_string(spec.out_channels));
  }

  const ConvGeometry g = conv_geometry(input, spec);
  const std::size_t batch = input.dim(0);
  const std::size_t out_c = spec.out_channels;
  const std::size_t patch = g.patch(), positions = g.positions();

  // Effective weight (masked copy when needed).
  std::vector<double> mask;
  std::vector<double> weff(weight.data().begin(), weight.data().end());
  if (spec.mask != MaskType::None) {
    mask = make_conv_mask(spec);
    for (std::size_t i = 0; i < weff.size(); ++i) weff[i] *= mask[i];
  }

  std::vector<double> out(batch * out_c * positions);
  std::vector<double> cols(g.direct() ? 0 : patch * positions);
  CMapR w(weff.data(), out_c, patch);
  for (std::size_t n = 0; n < batch; ++n) {
    const double* img = input.data().data() + n * g.channels * g.height * g.width;
    const double* colp = img;
    if (!g.direct()) {
      im2col(img, g, cols.data());
      colp = cols.data();
    }
    MapR o(out.data() + n * out_c * positions, out_c, positions);
    o.noalias() = w * CMapR(colp, patch, positions);
    if (bias.defined()) {
      auto b = bias.data();
      for (std::size_t k = 0; k < out_c; ++k) o.row(k).array() += b[k];
    }
  }

  Shape out_shape{batch, out_c, g.out_h, g.out_w};
  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      std::move(out_shape), std::move(out), std::move(inputs),
      [input, weight, bias, g, batch, out_c, weff = std::move(weff),
       mask = std::move(mask)](Node& self) {
        const std::size_t patch = g.patch(), positions = g.positions();
        double* gin = grad_of(input);
        double* gw = grad_of(weight);
        double* gb = bias.defined() ? grad_of(bias) : nullptr;
        CMapR w(weff.data(), out_c, patch);
        MatR dweff;
        if (gw) dweff = MatR::Zero(out_c, patch);
        std::vector<double> cols(g.direct() ? 0 : patch * positions);
        std::vector<double> dcols(gin && !g.direct() ? patch * positions : 0);
        for (std::size_t n = 0; n < batch; ++n) {
          CMapR go(self.grad.data() + n * out_c * positions, out_c, positions);
          const double* img = input.data().data() + n * g.channels * g.height * g.width;
          if (gw) {
            const double* colp = img;
            if (!g.direct()) {
              im2col(img, g, cols.data());
              colp = cols.data();
            }
            dweff.noalias() += go * CMapR(colp, patch, positions).transpose();
          }
          if (gb) {
            const double* gp = self.grad.data() + n * out_c * positions;
            for (std::size_t k = 0; k < out_c; ++k) {
              gb[k] += std::accumulate(gp + k * positions, gp + (k + 1) * positions, 0.0);
            }
          }
          if (gin) {
            double* gimg = gin + n * g.channels * g.height * g.width;
            if (g.direct()) {
              MapR(gimg, patch, positions).noalias() += w.transpose() * go;
            } else {
              MapR(dcols.data(), patch, positions).noalias() = w.transpose() * go;
              col2im_add(dcols.data(), g, gimg);
            }
          }
        }
        if (gw) {
          const double* d = dweff.data();
          if (mask.empty()) {
            for (std::size_t i = 0; i < weff.size(); ++i) gw[i] += d[i];
          } else {
            for (std::size_t i = 0; i < weff.size(); ++i) gw[i] += d[i] * mask[i];
          }
        }
      });
}

namespace {

struct LerpTable {
  std::vector<std::size_t> lo, hi;
  std::vector<double> frac;
};

LerpTable corner_aligned(std::size_t in, std::size_t out) {
  LerpTable t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = out > 1 ? static_cast<double>(i) * static_cast<double>(in - 1) /
                               static_cast<double>(out - 1)
                         : 0.0;
    auto lo = static_cast<std::size_t>(std::floor(src));
    lo = std::min(lo, in - 1);
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = src - static_cast<double>(lo);
  }
  return t;
}

}  // namespace

Tensor bilinear_upsample(const Tensor& input, std::size_t out_h, std::size_t out_w) {
  require_rank4(input, "bilinear_upsample");
  if (out_h == 0 || out_w == 0) throw ShapeError("bilinear_upsample: zero-sized target");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h == 0 || w == 0) throw ShapeError("bilinear_upsample: empty input");
  if (out_h < h || out_w < w) {
    throw ShapeError("bilinear_upsample: target " + std::to_string(out_h) + "x" +
                     std::to_string(out_w) + " smaller than input " + shape_str(input.shape()));
  }
  const LerpTable ty = corner_aligned(h, out_h), tx = corner_aligned(w, out_w);
  std::vector<double> out(n * c * out_h * out_w);
  auto src = input.data();
  for (std::size_t p = 0; p < n * c; ++p) {
    const double* s = src.data() + p * h * w;
    double* d = out.data() + p * out_h * out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const double* r0 = s + ty.lo[oy] * w;
      const double* r1 = s + ty.hi[oy] * w;
      const double fy = ty.frac[oy];
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const double fx = tx.frac[ox];
        const double top = r0[tx.lo[ox]] + fx * (r0[tx.hi[ox]] - r0[tx.lo[ox]]);
        const double bot = r1[tx.lo[ox]] + fx * (r1[tx.hi[ox]] - r1[tx.lo[ox]]);
        d[oy * out_w + ox] = top + fy * (bot - top);
      }
    }
  }
  return make_result({n, c, out_h, out_w}, std::move(out), {input},
                     [input, ty, tx, n, c, h, w, out_h, out_w](Node& self) {
                       double* g = grad_of(input);
                       for (std::size_t p = 0; p < n * c; ++p) {
                         const double* go = self.grad.data() + p * out_h * out_w;
                         double* gi = g + p * h * w;
                         for (std::size_t oy = 0; oy < out_h; ++oy) {
                           const double fy = ty.frac[oy];
                           double* r0 = gi + ty.lo[oy] * w;
                           double* r1 = gi + ty.hi[oy] * w;
                           for (std::size_t ox = 0; ox < out_w; ++ox) {
                             const double fx = tx.frac[ox];
                             const double v = go[oy * out_w + ox];
                             r0[tx.lo[ox]] += v * (1 - fy) * (1 - fx);
                             r0[tx.hi[ox]] += v * (1 - fy) * fx;
                             r1[tx.lo[ox]] += v * fy * (1 - fx);
                             r1[tx.hi[ox]] += v * fy * fx;
                           }
                         }
                       }
                     });
}

Tensor scale_gradient(const Tensor& x, double factor) {
  return unary(
      x, [](double v) { return v; }, [factor](double, double) { return factor; });
}

void log_softmax_inplace(std::span<double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : logits) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  for (double& v : logits) v -= lse;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> targets,
                             std::size_t class_axis) {
  const Shape& shape = logits.shape();
  if (class_axis >= shape.size()) throw ShapeError("softmax_cross_entropy: bad class axis");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < class_axis; ++i) outer *= shape[i];
  for (std::size_t i = class_axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t k = shape[class_axis];
  const std::size_t count = outer * inner;
  if (targets.size() != count) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(count) + " positions");
  }
  for (auto t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= k) {
      throw std::out_of_range("softmax_cross_entropy: target " + std::to_string(t) +
                              " outside [0," + std::to_string(k) + ")");
    }
  }

  auto x = logits.data();
  std::vector<double> probs(logits.numel());
  std::vector<double> slice(k);
  double total = 0.0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      for (std::size_t c = 0; c < k; ++c) slice[c] = x[(o * k + c) * inner + i];
      log_softmax_inplace(slice);
      total -= slice[targets[o * inner + i]];
      for (std::size_t c = 0; c < k; ++c) probs[(o * k + c) * inner + i] = std::exp(slice[c]);
    }
  }
  std::vector<std::int32_t> tgt(targets.begin(), targets.end());
  return make_result({1}, {total / static_cast<double>(count)}, {logits},
                     [logits, probs = std::move(probs), tgt = std::move(tgt), outer, inner, k,
                      count](Node& self) {
                       double* g = grad_of(logits);
                       const double s = self.grad[0] / static_cast<double>(count);
                       for (std::size_t o = 0; o < outer; ++o) {
                         for (std::size_t i = 0; i < inner; ++i) {
                           const std::size_t t = static_cast<std::size_t>(tgt[o * inner + i]);
                           for (std::size_t c = 0; c < k; ++c) {
                             const std::size_t idx = (o * k + c) * inner + i;
                             g[idx] += s * (probs[idx] - (c == t ? 1.0 : 0.0));
                           }
                         }
                       }
                     });
}

}  // namespace pixcolor
