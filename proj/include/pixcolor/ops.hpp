#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pixcolor/tensor.hpp"

namespace pixcolor {

enum class MaskType { None, A, B };

/// Convolution geometry. Padding is always "same" style: output extent is
/// ceil(in / stride), zeros outside the image.
///
/// Masked convolutions split channels into `mask_groups` ordered subchannel
/// groups (channel c of a C-channel map belongs to group (c % period) *
/// groups / period). At the centre tap, type A connects input group gi to
/// output group go only when gi < go; type B when gi <= go. Taps after the
/// centre in raster order are always cut.
struct ConvSpec {
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int in_channels = 1;
  int out_channels = 1;
  MaskType mask = MaskType::None;
  int mask_groups = 1;
  // Channel period used to assign output groups; 0 means out_channels. Gated
  // convs that emit [a | b] halves use out_channels / 2.
  int out_group_period = 0;

  Shape weight_shape() const {
    return {static_cast<std::size_t>(out_channels),
            static_cast<std::size_t>(in_channels),
            static_cast<std::size_t>(kernel_h),
            static_cast<std::size_t>(kernel_w)};
  }
  void validate() const;
};

/// 0/1 mask with the weight layout [out, in, kh, kw].
std::vector<double> make_conv_mask(const ConvSpec& spec);

/// Output extent of a same-padded convolution.
inline std::size_t conv_out_extent(std::size_t in, int stride) {
  return (in + static_cast<std::size_t>(stride) - 1) /
         static_cast<std::size_t>(stride);
}

// Elementwise arithmetic; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor abs(const Tensor& x);

/// tanh(a) * sigmoid(b).
Tensor gated_activation(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Mean absolute difference against a constant target.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

Tensor reshape(const Tensor& x, Shape shape);

/// Channel (axis 1) concatenation of NCHW tensors with equal N, H, W.
Tensor concat_channels(const std::vector<Tensor>& parts);
/// Channels [begin, begin + count) of an NCHW tensor.
Tensor narrow_channels(const Tensor& x, std::size_t begin, std::size_t count);

/// input [N,C,H,W], weight spec.weight_shape(), bias [out_channels] (may be
/// undefined for no bias).
Tensor conv2d(const Tensor& input, const ConvSpec& spec, const Tensor& weight,
              const Tensor& bias);

/// Separable bilinear resize with a corner-aligned sample grid:
/// output index i samples source coordinate i * (in - 1) / (out - 1).
Tensor bilinear_upsample(const Tensor& input, std::size_t out_h,
                         std::size_t out_w);

/// Identity on the forward pass; multiplies the incoming gradient by `factor`.
Tensor scale_gradient(const Tensor& x, double factor);

/// Mean over all positions of -log softmax(logits)[target] along
/// `class_axis`. `targets` lists class indices for every position in
/// row-major order of the logits shape with the class axis removed.
Tensor softmax_cross_entropy(const Tensor& logits,
                             std::span<const std::int32_t> targets,
                             std::size_t class_axis);

/// Non-differentiable, stabilised log-softmax over a contiguous slice.
void log_softmax_inplace(std::span<double> logits);

}  // namespace pixcolor
