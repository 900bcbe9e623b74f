#pragma once

#include <cstdint>
#include <vector>

#include "pixcolor/conditioning.hpp"
#include "pixcolor/image.hpp"
#include "pixcolor/nn.hpp"

namespace pixcolor {

struct PixelCnnConfig {
  double width_multiplier = 0.25;
  int hidden_channels = 64;   // before width scaling
  int head_channels = 1024;   // before width scaling
  int gated_blocks = 10;
  int stem_kernel = 7;
  int block_kernel = 5;

  void validate() const;
};

/// Masked autoregressive stack over a two-subchannel chroma grid, raster
/// order with Cr before Cb inside each pixel. Conditioning features enter
/// every gated block through a 1x1 adaptation conv added to both gate halves.
class PixelCnn {
 public:
  PixelCnn(ParameterSet& params, const PixelCnnConfig& config, int feature_channels, Rng& rng);

  /// chroma: [N,2,h,w] encoded inputs (see encode_chroma), features:
  /// [N,F,h,w]. Returns logits [N,2,32,h,w].
  Tensor forward(const Tensor& chroma, const Tensor& features) const;

  const PixelCnnConfig& config() const { return config_; }
  int hidden() const { return hidden_; }

 private:
  struct GatedBlock {
    ConvLayer masked;
    ConvLayer adapt;
  };
  PixelCnnConfig config_;
  int hidden_ = 0;
  ConvLayer stem_;
  std::vector<GatedBlock> blocks_;
  ConvLayer head_;
  ConvLayer logits_;
};

/// Bin centres mapped to [-1, 1]: (8 b + 4) / 128 - 1. Channel 0 is Cr.
Tensor encode_chroma(const std::vector<const ChromaGrid*>& grids);

/// Targets for softmax_cross_entropy over logits [N,2,32,h,w], class axis 2.
std::vector<std::int32_t> chroma_targets(const std::vector<const ChromaGrid*>& grids);

/// Conditioning network, adaptation convs and PixelCNN sharing one parameter
/// set (the jointly trained first stage).
struct ChromaModel {
  ParameterSet params;
  ConditioningNet conditioning;
  PixelCnn pixelcnn;

  ChromaModel(const ConditioningConfig& cond, const PixelCnnConfig& pix, std::uint64_t seed);
  ChromaModel(const ChromaModel&) = delete;
  ChromaModel& operator=(const ChromaModel&) = delete;

  /// The output head's parameters (final logits conv).
  std::vector<Tensor> head_parameters() const;

 private:
  ChromaModel(const ConditioningConfig& cond, const PixelCnnConfig& pix, Rng&& rng);
};

/// Logits for a batch of grids given conditioning features.
Tensor pixelcnn_forward(const ChromaModel& model, const std::vector<const ChromaGrid*>& grids,
                        const Tensor& features);

/// Teacher-forced mean cross-entropy in nats per subpixel.
Tensor pixelcnn_nll(const ChromaModel& model, const std::vector<const ChromaGrid*>& grids,
                    const Tensor& features);

struct SampleTrace {
  // Per subpixel (raster index * 2 + subchannel) the 32 logits the sampler
  // drew from.
  std::vector<std::vector<double>> logits;
};

/// Raster-order ancestral sampling from features [1,F,h,w]. Temperature 0
/// selects the argmax (lowest bin on ties); otherwise logits are divided by
/// the temperature before the softmax.
ChromaGrid pixelcnn_sample(const ChromaModel& model, const Tensor& features,
                           std::uint64_t seed, double temperature,
                           SampleTrace* trace = nullptr);

/// Total log-probability of a grid: -nll * 2 * h * w.
double sample_log_likelihood(const ChromaModel& model, const ChromaGrid& grid,
                             const Tensor& features);

}  // namespace pixcolor
