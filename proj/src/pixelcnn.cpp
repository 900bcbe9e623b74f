#include "pixcolor/pixelcnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pixcolor/colorspace.hpp"

namespace pixcolor {

void PixelCnnConfig::validate() const {
  if (!(width_multiplier > 0)) throw std::invalid_argument("width_multiplier must be > 0");
  if (hidden_channels < 2 || head_channels < 2) {
    throw std::invalid_argument("pixelcnn channel counts must be >= 2");
  }
  if (gated_blocks < 0) throw std::invalid_argument("gated_blocks must be >= 0");
  if (stem_kernel % 2 == 0 || block_kernel % 2 == 0) {
    throw std::invalid_argument("masked kernels must have odd extents");
  }
}

namespace {

ConvSpec masked_spec(int kernel, int in, int out, MaskType type, int out_period = 0) {
  ConvSpec s = conv_spec(kernel, 1, in, out);
  s.mask = type;
  s.mask_groups = 2;
  s.out_group_period = out_period;
  return s;
}

}  // namespace

PixelCnn::PixelCnn(ParameterSet& params, const PixelCnnConfig& config, int feature_channels,
                   Rng& rng)
    : config_(config) {
  config_.validate();
  hidden_ = scaled_channels(config_.hidden_channels, config_.width_multiplier, 2);
  const int head = scaled_channels(config_.head_channels, config_.width_multiplier, 2);
  stem_ = ConvLayer(params, "pixelcnn/stem",
                    masked_spec(config_.stem_kernel, 2, hidden_, MaskType::A), rng);
  for (int b = 0; b < config_.gated_blocks; ++b) {
    const std::string id = std::to_string(b);
    GatedBlock block;
    block.masked = ConvLayer(params, "pixelcnn/block" + id,
                             masked_spec(config_.block_kernel, hidden_, 2 * hidden_,
                                         MaskType::B, hidden_),
                             rng);
    block.adapt = ConvLayer(params, "adapt/block" + id,
                            conv_spec(1, 1, feature_channels, 2 * hidden_), rng);
    blocks_.push_back(std::move(block));
  }
  head_ = ConvLayer(params, "pixelcnn/head", masked_spec(1, hidden_, head, MaskType::B), rng);
  logits_ = ConvLayer(params, "pixelcnn/logits",
                      masked_spec(1, head, 2 * kChromaBins, MaskType::B), rng);
}

Tensor PixelCnn::forward(const Tensor& chroma, const Tensor& features) const {
  if (chroma.rank() != 4 || chroma.dim(1) != 2) {
    throw ShapeError("pixelcnn: chroma input must be [N,2,h,w], got " + shape_str(chroma.shape()));
  }
  if (features.rank() != 4 || features.dim(0) != chroma.dim(0) ||
      features.dim(2) != chroma.dim(2) || features.dim(3) != chroma.dim(3)) {
    throw ShapeError("pixelcnn: conditioning features " + shape_str(features.shape()) +
                     " do not match chroma grid " + shape_str(chroma.shape()));
  }
  const auto h = static_cast<std::size_t>(hidden_);
  Tensor x = stem_(chroma);
  for (const auto& block : blocks_) {
    Tensor pre = add(block.masked(x), block.adapt(features));
    x = add(x, gated_activation(narrow_channels(pre, 0, h), narrow_channels(pre, h, h)));
  }
  Tensor out = logits_(relu(head_(relu(x))));
  return reshape(out, {chroma.dim(0), 2, static_cast<std::size_t>(kChromaBins), chroma.dim(2),
                       chroma.dim(3)});
}

Tensor encode_chroma(const std::vector<const ChromaGrid*>& grids) {
  if (grids.empty()) throw std::invalid_argument("encode_chroma: no grids");
  const int w = grids[0]->width, h = grids[0]->height;
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  std::vector<double> values(grids.size() * 2 * hw);
  for (std::size_t n = 0; n < grids.size(); ++n) {
    if (grids[n]->width != w || grids[n]->height != h) {
      throw ShapeError("encode_chroma: grids differ in size");
    }
    for (int s = 0; s < 2; ++s) {
      const auto& ch = grids[n]->channel(s);
      for (std::size_t i = 0; i < hw; ++i) {
        values[(n * 2 + s) * hw + i] = dequantize_chroma(ch[i]) / 128.0 - 1.0;
      }
    }
  }
  return Tensor::from_values(
      {grids.size(), 2, static_cast<std::size_t>(h), static_cast<std::size_t>(w)},
      std::move(values));
}

std::vector<std::int32_t> chroma_targets(const std::vector<const ChromaGrid*>& grids) {
  std::vector<std::int32_t> targets;
  for (const ChromaGrid* g : grids) {
    for (int s = 0; s < 2; ++s) {
      for (auto bin : g->channel(s)) {
        if (bin >= kChromaBins) throw std::out_of_range("chroma bin out of range");
        targets.push_back(bin);
      }
    }
  }
  return targets;
}

ChromaModel::ChromaModel(const ConditioningConfig& cond, const PixelCnnConfig& pix,
                         std::uint64_t seed)
    : ChromaModel(cond, pix, Rng(seed)) {}

ChromaModel::ChromaModel(const ConditioningConfig& cond, const PixelCnnConfig& pix, Rng&& rng)
    : conditioning(params, cond, rng), pixelcnn(params, pix, cond.feature_channels, rng) {}

std::vector<Tensor> ChromaModel::head_parameters() const {
  return {params.get("pixelcnn/logits/w"), params.get("pixelcnn/logits/b")};
}

Tensor pixelcnn_forward(const ChromaModel& model, const std::vector<const ChromaGrid*>& grids,
                        const Tensor& features) {
  return model.pixelcnn.forward(encode_chroma(grids), features);
}

Tensor pixelcnn_nll(const ChromaModel& model, const std::vector<const ChromaGrid*>& grids,
                    const Tensor& features) {
  Tensor logits = pixelcnn_forward(model, grids, features);
  const auto targets = chroma_targets(grids);
  return softmax_cross_entropy(logits, targets, 2);
}

ChromaGrid pixelcnn_sample(const ChromaModel& model, const Tensor& features, std::uint64_t seed,
                           double temperature, SampleTrace* trace) {
  if (!(temperature >= 0)) throw std::invalid_argument("sampling temperature must be >= 0");
  if (features.rank() != 4 || features.dim(0) != 1) {
    throw ShapeError("pixelcnn_sample: features must be [1,F,h,w]");
  }
  NoGradGuard no_grad;
  const int h = static_cast<int>(features.dim(2)), w = static_cast<int>(features.dim(3));
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  ChromaGrid grid(w, h);
  Rng rng(seed);
  if (trace) trace->logits.assign(2 * hw, {});
  std::vector<double> slice(kChromaBins);
  for (std::size_t p = 0; p < hw; ++p) {
    for (int s = 0; s < 2; ++s) {
      Tensor logits = pixelcnn_forward(model, {&grid}, features);
      auto data = logits.data();
      for (int k = 0; k < kChromaBins; ++k) slice[k] = data[(s * kChromaBins + k) * hw + p];
      if (trace) trace->logits[p * 2 + s] = slice;
      int bin = 0;
      if (temperature == 0.0) {
        bin = static_cast<int>(std::max_element(slice.begin(), slice.end()) - slice.begin());
      } else {
        std::vector<double> lp(slice);
        for (double& v : lp) v /= temperature;
        log_softmax_inplace(lp);
        const double u = rng.uniform();
        double acc = 0.0;
        bin = kChromaBins - 1;
        for (int k = 0; k < kChromaBins; ++k) {
          acc += std::exp(lp[k]);
          if (u < acc) {
            bin = k;
            break;
          }
        }
      }
      grid.channel(s)[p] = static_cast<std::uint8_t>(bin);
    }
  }
  return grid;
}

double sample_log_likelihood(const ChromaModel& model, const ChromaGrid& grid,
                             const Tensor& features) {
  NoGradGuard no_grad;
  const double nll = pixelcnn_nll(model, {&grid}, features).item();
  return -nll * static_cast<double>(2 * grid.pixels());
}

}  // namespace pixcolor
