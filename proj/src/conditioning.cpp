#include "pixcolor/conditioning.hpp"

#include <stdexcept>
#include <string>

namespace pixcolor {

void ConditioningConfig::validate() const {
  if (!(width_multiplier > 0)) throw std::invalid_argument("width_multiplier must be > 0");
  for (int b : block_counts) {
    if (b < 1) throw std::invalid_argument("each conditioning stage needs >= 1 block");
  }
  if (feature_channels < 1) throw std::invalid_argument("feature_channels must be >= 1");
  if (gradient_multiplier_start_step < 0) {
    throw std::invalid_argument("gradient multiplier start step must be >= 0");
  }
}

Tensor BottleneckBlock::operator()(const Tensor& x) const {
  Tensor y = relu(reduce(x));
  y = relu(spatial(y));
  y = expand(y);
  Tensor shortcut = has_projection ? projection(x) : x;
  return relu(add(y, shortcut));
}

ConditioningNet::ConditioningNet(ParameterSet& params, const ConditioningConfig& config, Rng& rng)
    : config_(config) {
  config_.validate();
  const double w = config_.width_multiplier;
  const int stem_out = scaled_channels(64, w);
  stem_ = ConvLayer(params, "cond/stem", conv_spec(7, 2, 3, stem_out), rng);

  struct Stage {
    int mid, out, stride;
  };
  const std::array<Stage, 3> stages{{{64, 256, 2}, {128, 512, 2}, {256, 1024, 1}}};
  int in = stem_out;
  for (int s = 0; s < 3; ++s) {
    const int mid = scaled_channels(stages[s].mid, w);
    const int out = scaled_channels(stages[s].out, w);
    for (int b = 0; b < config_.block_counts[s]; ++b) {
      const int stride = b == 0 ? stages[s].stride : 1;
      const std::string name = "cond/stage" + std::to_string(s + 1) + "/block" + std::to_string(b);
      BottleneckBlock block;
      block.reduce = ConvLayer(params, name + "/reduce", conv_spec(1, 1, in, mid), rng);
      block.spatial = ConvLayer(params, name + "/spatial", conv_spec(3, stride, mid, mid), rng);
      block.expand = ConvLayer(params, name + "/expand", conv_spec(1, 1, mid, out), rng);
      block.has_projection = stride != 1 || in != out;
      if (block.has_projection) {
        block.projection = ConvLayer(params, name + "/projection", conv_spec(1, stride, in, out), rng);
      }
      blocks_.push_back(std::move(block));
      in = out;
    }
  }
  const int f = config_.feature_channels;
  head_[0] = ConvLayer(params, "cond/head0", conv_spec(3, 1, in, f), rng);
  head_[1] = ConvLayer(params, "cond/head1", conv_spec(3, 1, f, f), rng);
  head_[2] = ConvLayer(params, "cond/head2", conv_spec(3, 1, f, f), rng);
}

Tensor ConditioningNet::forward(const Tensor& gray) const {
  if (gray.rank() != 4 || gray.dim(1) != 1) {
    throw ShapeError("conditioning: expected [N,1,H,W], got " + shape_str(gray.shape()));
  }
  if (gray.dim(2) % 8 != 0 || gray.dim(3) % 8 != 0) {
    throw ShapeError("conditioning: image sides must be divisible by 8, got " +
                     shape_str(gray.shape()));
  }
  // Luminance replicated to the three input channels, scaled to [-1, 1].
  Tensor x = add_scalar(scale(gray, 1.0 / 127.5), -1.0);
  x = concat_channels({x, x, x});
  x = relu(stem_(x));
  for (const auto& block : blocks_) x = block(x);
  x = relu(head_[0](x));
  x = relu(head_[1](x));
  return head_[2](x);
}

double gradient_multiplier_factor(std::int64_t step, const ConditioningConfig& config) {
  if (step < 0) throw std::invalid_argument("gradient_multiplier: negative step");
  return step >= config.gradient_multiplier_start_step ? config.gradient_multiplier_gamma : 0.0;
}

Tensor gradient_multiplier(const Tensor& features, std::int64_t step,
                           const ConditioningConfig& config) {
  const double factor = gradient_multiplier_factor(step, config);
  // A zero factor cuts the graph; parameter grads stay exactly zero either way.
  if (factor == 0.0) return features.detach();
  return scale_gradient(features, factor);
}

Tensor gray_tensor(const std::vector<const Plane*>& planes) {
  if (planes.empty()) throw std::invalid_argument("gray_tensor: no planes");
  const int w = planes[0]->width, h = planes[0]->height;
  std::vector<double> values;
  values.reserve(planes.size() * planes[0]->size());
  for (const Plane* p : planes) {
    if (p->width != w || p->height != h) throw ShapeError("gray_tensor: planes differ in size");
    values.insert(values.end(), p->values.begin(), p->values.end());
  }
  return Tensor::from_values(
      {planes.size(), 1, static_cast<std::size_t>(h), static_cast<std::size_t>(w)},
      std::move(values));
}

}  // namespace pixcolor
