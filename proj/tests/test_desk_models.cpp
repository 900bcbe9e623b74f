// Properties of the desk-trained models. Needs the desk experiment built by
// `pixcolor_acceptance --prepare`; its directory comes from PIXCOLOR_DESK_DIR.

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "desk.hpp"
#include "doctest.h"
#include "model_checks.hpp"
#include "pixcolor/checkpoint.hpp"
#include "pixcolor/colorspace.hpp"
#include "pixcolor/dataset.hpp"
#include "pixcolor/train.hpp"

using namespace pixcolor;

namespace {

struct Trained {
  desk::Layout layout;
  std::unique_ptr<ChromaModel> chroma;
  std::unique_ptr<RefinementNet> refine;
  Dataset heldout;

  Trained() {
    const char* dir = std::getenv("PIXCOLOR_DESK_DIR");
    if (!dir) throw std::runtime_error("PIXCOLOR_DESK_DIR is not set");
    layout.root = dir;
    const auto ckpt = load_checkpoint(layout.model("runA") / "pixelcnn.ckpt");
    chroma = load_chroma_model(ckpt);
    refine = load_refinement_net(load_checkpoint(layout.model("runA") / "refine.ckpt"));
    std::ostringstream quiet;
    heldout = ingest_dataset(layout.heldout(), checkpoint_config(ckpt), quiet);
  }

  Tensor features(const Example& ex) const {
    NoGradGuard guard;
    return chroma->conditioning.forward(gray_tensor({&ex.gray()}));
  }
};

Trained& trained() {
  static Trained t;
  return t;
}

std::vector<double> loss_column(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) out.push_back(std::stod(line.substr(line.find(',') + 1)));
  return out;
}

}  // namespace

TEST_CASE("conditioning on the true image beats mismatched features") {
  auto& t = trained();
  const std::size_t n = t.heldout.size();
  double matched = 0, shuffled = 0;
  for (std::size_t i = 0; i < n; ++i) {
    NoGradGuard guard;
    const auto& ex = t.heldout[i];
    matched += pixelcnn_nll(*t.chroma, {&ex.grid}, t.features(ex)).item();
    shuffled += pixelcnn_nll(*t.chroma, {&ex.grid}, t.features(t.heldout[(i + n / 2) % n])).item();
  }
  MESSAGE("held-out NLL " << matched / n << " true vs " << shuffled / n << " shuffled features");
  CHECK(matched < shuffled);
}

TEST_CASE("greedy decode scores at least as high as ten random samples") {
  auto& t = trained();
  int images = 0, dominated = 0;
  for (std::size_t i = 0; i < t.heldout.size(); i += 8) {
    const Tensor f = t.features(t.heldout[i]);
    NoGradGuard guard;
    const double greedy = sample_log_likelihood(*t.chroma, pixelcnn_sample(*t.chroma, f, 0, 0.0), f);
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      ok &= greedy >= sample_log_likelihood(*t.chroma, pixelcnn_sample(*t.chroma, f, seed, 1.0), f);
    }
    ++images;
    dominated += ok;
    CAPTURE(i);
    CHECK(ok);
  }
  MESSAGE("greedy dominated on " << dominated << "/" << images << " images");
}

TEST_CASE("refined colour beats unrefined bilinear recombination in PSNR") {
  auto& t = trained();
  int wins = 0;
  for (const auto& ex : t.heldout.examples()) {
    NoGradGuard guard;
    const Tensor chroma = refine_forward(*t.refine, ex.gray(), ex.grid);
    const int w = ex.gray().width, h = ex.gray().height;
    Plane cr(w, h), cb(w, h);
    std::copy_n(chroma.data().begin(), w * h, cr.values.begin());
    std::copy_n(chroma.data().begin() + w * h, w * h, cb.values.begin());
    const RgbImage refined = combine_luma_chroma(ex.gray(), cb, cr);
    const ChromaPlanes low = dequantize_grid(ex.grid);
    const RgbImage unrefined =
        combine_luma_chroma(ex.gray(), bilinear_resize(low.cb, w, h), bilinear_resize(low.cr, w, h));
    wins += psnr(refined, ex.rgb) >= psnr(unrefined, ex.rgb);
  }
  MESSAGE("refined PSNR >= unrefined on " << wins << "/" << t.heldout.size() << " held-out images");
  CHECK(wins >= 0.8 * t.heldout.size());
}

TEST_CASE("refinement loss under a 50-step moving average does not increase") {
  auto& t = trained();
  const auto losses = loss_column(t.layout.model("runA") / "refine_loss.csv");
  REQUIRE(losses.size() >= 100);
  // Averages over consecutive 50-step windows.
  std::vector<double> windows;
  for (std::size_t s = 0; s + 50 <= losses.size(); s += 50) {
    double m = 0;
    for (std::size_t i = s; i < s + 50; ++i) m += losses[i];
    windows.push_back(m / 50);
  }
  int rises = 0;
  for (std::size_t i = 1; i < windows.size(); ++i) {
    if (windows[i] > windows[i - 1]) {
      ++rises;
      MESSAGE("window " << i << " rose from " << windows[i - 1] << " to " << windows[i]);
    }
  }
  CHECK(rises == 0);
  CHECK(windows.back() < windows.front());
}

TEST_CASE("desk samples differ across seeds and repeat for one seed") {
  auto& t = trained();
  const auto& ex = t.heldout[3];
  const Tensor f = t.features(ex);
  const ChromaGrid a = pixelcnn_sample(*t.chroma, f, 1, 1.0), b = pixelcnn_sample(*t.chroma, f, 2, 1.0);
  CHECK(a != b);
  CHECK(pixelcnn_sample(*t.chroma, f, 1, 1.0) == a);
}
