#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pixcolor/image.hpp"
#include "pixcolor/nn.hpp"

namespace pixcolor {

struct ConditioningConfig {
  double width_multiplier = 0.25;
  // Residual bottleneck blocks per stage (full scale: 3, 4, 23).
  std::array<int, 3> block_counts{1, 1, 2};
  int feature_channels = 64;
  // Backward scale applied to gradients reaching the conditioning network
  // once `gradient_multiplier_start_step` is reached; before that the
  // network receives no gradient at all.
  double gradient_multiplier_gamma = 0.1;
  std::int64_t gradient_multiplier_start_step = 500;

  void validate() const;
};

/// Residual bottleneck: 1x1 reduce, 3x3 (strided), 1x1 expand, added to an
/// identity or 1x1 projection shortcut, then ReLU.
struct BottleneckBlock {
  ConvLayer reduce;
  ConvLayer spatial;
  ConvLayer expand;
  ConvLayer projection;  // weight undefined when the shortcut is identity
  bool has_projection = false;

  Tensor operator()(const Tensor& x) const;
};

/// Grayscale plane -> feature map at 1/8 resolution.
class ConditioningNet {
 public:
  ConditioningNet(ParameterSet& params, const ConditioningConfig& config, Rng& rng);

  /// gray: [N,1,H,W] with values in [0,255]; H and W divisible by 8.
  /// Returns [N, feature_channels, H/8, W/8].
  Tensor forward(const Tensor& gray) const;

  const ConditioningConfig& config() const { return config_; }
  const std::vector<BottleneckBlock>& blocks() const { return blocks_; }

 private:
  ConditioningConfig config_;
  ConvLayer stem_;
  std::vector<BottleneckBlock> blocks_;
  std::array<ConvLayer, 3> head_;
};

/// Backward multiplier in effect at a training step.
double gradient_multiplier_factor(std::int64_t step, const ConditioningConfig& config);

/// Identity forward; gradients into `features` scaled per the step policy.
Tensor gradient_multiplier(const Tensor& features, std::int64_t step,
                           const ConditioningConfig& config);

/// Stacks grayscale planes of equal size into [N,1,H,W].
Tensor gray_tensor(const std::vector<const Plane*>& planes);

}  // namespace pixcolor
