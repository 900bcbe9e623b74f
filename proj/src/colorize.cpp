#include "pixcolor/colorize.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "pixcolor/colorspace.hpp"

namespace pixcolor {

namespace {

Plane resize_plane(const Plane& p, int w, int h) {
  if (p.width == w && p.height == h) return p;
  if (w >= p.width && h >= p.height) return bilinear_resize(p, w, h);
  return area_resize(p, w, h);
}

Plane tensor_channel(const Tensor& t, int c) {
  const int h = static_cast<int>(t.dim(1)), w = static_cast<int>(t.dim(2));
  Plane p(w, h);
  auto data = t.data();
  std::copy_n(data.begin() + static_cast<std::size_t>(c) * w * h, p.values.size(), p.values.begin());
  return p;
}

}  // namespace

int worker_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PIXCOLOR_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Plane pad_edge(const Plane& p, int w, int h) {
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(x, y) = p.at(std::min(x, p.width - 1), std::min(y, p.height - 1));
    }
  }
  return out;
}

Plane crop_plane(const Plane& p, int w, int h) {
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    std::copy_n(p.values.begin() + static_cast<std::size_t>(y) * p.width, w,
                out.values.begin() + static_cast<std::size_t>(y) * w);
  }
  return out;
}

std::vector<Colorization> colorize(const ChromaModel& model, const RefinementNet& refine,
                                   const RgbImage& input, const ColorizeOptions& opts) {
  if (input.width <= 0 || input.height <= 0) throw std::invalid_argument("colorize: empty image");
  if (opts.seeds.empty()) throw std::invalid_argument("colorize: no seeds");
  const YccImage ycc = rgb_to_ycc(input);
  const auto [ww, wh] = small_side_extent(input.width, input.height, opts.image_side);
  const int pw = (ww + 7) / 8 * 8, ph = (wh + 7) / 8 * 8;
  const Plane gray = pad_edge(resize_plane(ycc.y, ww, wh), pw, ph);

  Tensor features;
  {
    NoGradGuard guard;
    features = model.conditioning.forward(gray_tensor({&gray}));
  }

  std::vector<Colorization> results(opts.seeds.size());
  auto finish = [&](const Plane& cr, const Plane& cb) {
    return combine_luma_chroma(ycc.y, resize_plane(crop_plane(cb, ww, wh), input.width, input.height),
                               resize_plane(crop_plane(cr, ww, wh), input.width, input.height));
  };
  auto run_one = [&](std::size_t i) {
    NoGradGuard guard;
    Colorization& r = results[i];
    r.seed = opts.seeds[i];
    r.grid = pixelcnn_sample(model, features, r.seed, opts.temperature);
    r.log_likelihood = sample_log_likelihood(model, r.grid, features);
    const Tensor chroma = refine_forward(refine, gray, r.grid);
    r.refined = finish(tensor_channel(chroma, 0), tensor_channel(chroma, 1));
    const ChromaPlanes low = dequantize_grid(r.grid);
    r.unrefined = finish(bilinear_resize(low.cr, pw, ph), bilinear_resize(low.cb, pw, ph));
  };

  const int threads = std::min<int>(worker_threads(opts.threads), static_cast<int>(results.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < results.size(); ++i) run_one(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < results.size(); i = next++) run_one(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace pixcolor
