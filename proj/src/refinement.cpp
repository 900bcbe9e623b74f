#include "pixcolor/refinement.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pixcolor/colorspace.hpp"
#include "pixcolor/conditioning.hpp"

namespace pixcolor {

void RefinementConfig::validate() const {
  if (!(width_multiplier > 0)) throw std::invalid_argument("width_multiplier must be > 0");
}

RefinementNet::RefinementNet(const RefinementConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  Rng rng(seed);
  const double w = config_.width_multiplier;
  auto ch = [w](int base) { return scaled_channels(base, w); };
  auto layer = [&](const std::string& name, int kernel, int stride, int in, int out) {
    return ConvLayer(params_, "refine/" + name, conv_spec(kernel, stride, in, out), rng);
  };

  encoder_.push_back(layer("enc0", 3, 2, 3, ch(64)));
  encoder_.push_back(layer("enc1", 3, 1, ch(64), ch(128)));
  encoder_.push_back(layer("enc2", 3, 2, ch(128), ch(128)));
  encoder_.push_back(layer("enc3", 3, 1, ch(128), ch(256)));
  encoder_.push_back(layer("enc4", 3, 2, ch(256), ch(256)));
  encoder_.push_back(layer("enc5", 3, 1, ch(256), ch(512)));
  encoder_.push_back(layer("enc6", 3, 1, ch(512), ch(512)));
  encoder_.push_back(layer("enc7", 3, 1, ch(512), ch(256)));

  context_.push_back(layer("ctx0", 3, 2, ch(256), ch(512)));
  context_.push_back(layer("ctx1", 3, 1, ch(512), ch(512)));
  context_.push_back(layer("ctx2", 3, 2, ch(512), ch(512)));
  context_.push_back(layer("ctx3", 3, 1, ch(512), ch(512)));
  context_.push_back(layer("ctx4", 5, 1, ch(512), ch(1024)));
  context_.push_back(layer("ctx5", 3, 1, ch(1024), ch(512)));

  fuse_.push_back(layer("fuse0", 3, 1, ch(256) + ch(512), ch(128)));
  fuse_.push_back(layer("fuse1", 3, 1, ch(128), ch(128)));
  up1_.push_back(layer("up1_0", 3, 1, ch(128) + ch(256), ch(64)));
  up1_.push_back(layer("up1_1", 3, 1, ch(64), ch(64)));
  up2_.push_back(layer("up2_0", 3, 1, ch(64) + ch(128), ch(32)));
  up2_.push_back(layer("up2_1", 3, 1, ch(32), ch(32)));
  output_ = layer("out", 1, 1, ch(32), 2);
}

Tensor RefinementNet::forward(const Tensor& gray, const Tensor& hint) const {
  if (gray.rank() != 4 || gray.dim(1) != 1 || hint.rank() != 4 || hint.dim(1) != 2 ||
      gray.dim(0) != hint.dim(0) || gray.dim(2) != hint.dim(2) || gray.dim(3) != hint.dim(3)) {
    throw ShapeError("refinement: expected gray [N,1,H,W] and hint [N,2,H,W], got " +
                     shape_str(gray.shape()) + " and " + shape_str(hint.shape()));
  }
  const std::size_t height = gray.dim(2), width = gray.dim(3);
  Tensor x = concat_channels({gray, hint});
  x = add_scalar(scale(x, 1.0 / 127.5), -1.0);

  std::vector<Tensor> enc;
  for (const auto& layer : encoder_) {
    x = relu(layer(x));
    enc.push_back(x);
  }
  Tensor mid = x;
  Tensor ctx = mid;
  for (const auto& layer : context_) ctx = relu(layer(ctx));
  ctx = bilinear_upsample(ctx, mid.dim(2), mid.dim(3));

  x = concat_channels({mid, ctx});
  for (const auto& layer : fuse_) x = relu(layer(x));

  const Tensor& skip4 = enc[3];  // 1/4
  x = bilinear_upsample(x, skip4.dim(2), skip4.dim(3));
  x = concat_channels({x, skip4});
  for (const auto& layer : up1_) x = relu(layer(x));

  const Tensor& skip2 = enc[1];  // 1/2
  x = bilinear_upsample(x, skip2.dim(2), skip2.dim(3));
  x = concat_channels({x, skip2});
  for (const auto& layer : up2_) x = relu(layer(x));

  x = scale(sigmoid(output_(x)), 255.0);
  return bilinear_upsample(x, height, width);
}

Tensor upsample_hint(const std::vector<const ChromaGrid*>& grids, int out_w, int out_h) {
  if (grids.empty()) throw std::invalid_argument("upsample_hint: no grids");
  const int gw = grids[0]->width, gh = grids[0]->height;
  std::vector<double> values;
  values.reserve(grids.size() * 2 * gw * gh);
  for (const ChromaGrid* g : grids) {
    if (g->width != gw || g->height != gh) throw ShapeError("upsample_hint: grids differ in size");
    const ChromaPlanes planes = dequantize_grid(*g);
    values.insert(values.end(), planes.cr.values.begin(), planes.cr.values.end());
    values.insert(values.end(), planes.cb.values.begin(), planes.cb.values.end());
  }
  Tensor low = Tensor::from_values(
      {grids.size(), 2, static_cast<std::size_t>(gh), static_cast<std::size_t>(gw)},
      std::move(values));
  return bilinear_upsample(low, static_cast<std::size_t>(out_h), static_cast<std::size_t>(out_w));
}

Tensor refine_forward(const RefinementNet& net, const Plane& gray, const ChromaGrid& low_chroma) {
  // Aspect ratios must agree to within one grid cell.
  const double image_aspect = static_cast<double>(gray.width) / gray.height;
  const double grid_aspect = static_cast<double>(low_chroma.width) / low_chroma.height;
  const double cell = 1.0 / std::min(low_chroma.width, low_chroma.height);
  if (std::abs(image_aspect - grid_aspect) > image_aspect * cell + 1e-12) {
    throw std::invalid_argument("refine_forward: grid aspect " + std::to_string(grid_aspect) +
                                " does not match image aspect " + std::to_string(image_aspect));
  }
  Tensor hint = upsample_hint({&low_chroma}, gray.width, gray.height);
  Tensor out = net.forward(gray_tensor({&gray}), hint);
  return reshape(out, {2, out.dim(2), out.dim(3)});
}

}  // namespace pixcolor
