#pragma once

#include <cstdint>
#include <vector>

#include "pixcolor/image.hpp"
#include "pixcolor/nn.hpp"

namespace pixcolor {

struct RefinementConfig {
  double width_multiplier = 0.25;

  void validate() const;
};

/// Deterministic second stage: full-resolution grey plus a bilinearly
/// enlarged low-resolution chroma hint -> full-resolution chroma.
///
/// Layout: strided 3x3 encoder down to 1/8, a 1/32 context branch that is
/// enlarged back and fused at 1/8, then a decoder that doubles resolution
/// twice with bilinear upsampling (concatenating the encoder maps of the same
/// resolution) and a 1x1 conv to two channels. The sigmoid output, scaled to
/// [0, 255], is bilinearly enlarged to the input size.
class RefinementNet {
 public:
  RefinementNet(const RefinementConfig& config, std::uint64_t seed);
  RefinementNet(const RefinementNet&) = delete;
  RefinementNet& operator=(const RefinementNet&) = delete;

  /// gray: [N,1,H,W] in [0,255]; hint: [N,2,H,W] chroma (Cr, Cb) in [0,255].
  /// Returns [N,2,H,W] chroma (Cr, Cb) in [0,255].
  Tensor forward(const Tensor& gray, const Tensor& hint) const;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const RefinementConfig& config() const { return config_; }

 private:
  RefinementConfig config_;
  ParameterSet params_;
  std::vector<ConvLayer> encoder_;  // 8 layers, ends at 1/8
  std::vector<ConvLayer> context_;  // 6 layers, 1/32
  std::vector<ConvLayer> fuse_;     // 2 layers at 1/8
  std::vector<ConvLayer> up1_;      // 2 layers at 1/4
  std::vector<ConvLayer> up2_;      // 2 layers at 1/2
  ConvLayer output_;
};

/// Dequantised grids enlarged (corner-aligned bilinear) to H x W: [N,2,H,W].
Tensor upsample_hint(const std::vector<const ChromaGrid*>& grids, int out_w, int out_h);

/// refine_forward for single images with a matching-aspect grid.
Tensor refine_forward(const RefinementNet& net, const Plane& gray, const ChromaGrid& low_chroma);

}  // namespace pixcolor
