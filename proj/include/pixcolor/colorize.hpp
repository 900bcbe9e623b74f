#pragma once

#include <cstdint>
#include <vector>

#include "pixcolor/image.hpp"
#include "pixcolor/pixelcnn.hpp"
#include "pixcolor/refinement.hpp"

namespace pixcolor {

struct Colorization {
  std::uint64_t seed = 0;
  ChromaGrid grid;          // the sampled latent
  double log_likelihood = 0.0;
  RgbImage refined;         // input size
  RgbImage unrefined;       // grid bilinearly enlarged, input size
};

struct ColorizeOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double temperature = 1.0;
  int image_side = 64;      // working resolution of the smaller side
  int threads = 0;          // 0: PIXCOLOR_THREADS or hardware concurrency
};

/// Worker count: `requested` if positive, else PIXCOLOR_THREADS, else the
/// hardware concurrency (always >= 1).
int worker_threads(int requested);

/// Colorizes any RGB or grey input. The luminance is resized so its smaller
/// side is `image_side`, edge-padded to a multiple of 8, sampled and refined;
/// the chroma is cropped, enlarged to the input size and recombined with the
/// input's own luminance. One result per seed, in seed order.
std::vector<Colorization> colorize(const ChromaModel& model, const RefinementNet& refine,
                                   const RgbImage& input, const ColorizeOptions& opts);

/// Edge-replicating pad of a plane to (w, h) >= its size.
Plane pad_edge(const Plane& p, int w, int h);
Plane crop_plane(const Plane& p, int w, int h);

}  // namespace pixcolor
