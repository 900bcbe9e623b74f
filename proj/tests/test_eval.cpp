#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "metric_oracles.hpp"
#include "model_checks.hpp"
#include "pixcolor/colorspace.hpp"
#include "pixcolor/eval.hpp"
#include "pixcolor/synthetic.hpp"
#include "support.hpp"

using namespace pixcolor;

namespace {

Histogram hist(std::vector<double> mass) { return Histogram{0.0, 1.0, std::move(mass)}; }

RgbImage perturbed(const RgbImage& img, Rng& rng, int amount) {
  RgbImage out = img;
  for (auto& p : out.pixels) p = static_cast<std::uint8_t>(std::clamp<int>(p + rng.below(2 * amount + 1) - amount, 0, 255));
  return out;
}

RgbImage swap_channels(const RgbImage& img) {
  RgbImage out = img;
  for (std::size_t i = 0; i < out.pixels.size(); i += 3) std::swap(out.pixels[i], out.pixels[i + 2]);
  return out;
}

}  // namespace

TEST_CASE("histogram intersection examples") {
  CHECK(histogram_intersection(hist({0.5, 0.5, 0}), hist({0.25, 0.25, 0.5})) == 0.5);
  CHECK(histogram_intersection(hist({0.2, 0.3, 0.5}), hist({0.2, 0.3, 0.5})) == 1.0);
  CHECK(histogram_intersection(hist({1, 0, 0}), hist({0, 0.4, 0.6})) == 0.0);
  CHECK(histogram_intersection(hist({0.1, 0.9}), hist({0.6, 0.4})) ==
        histogram_intersection(hist({0.6, 0.4}), hist({0.1, 0.9})));
  CHECK_THROWS_AS(histogram_intersection(hist({0.5, 0.5}), hist({1.0 / 3, 1.0 / 3, 1.0 / 3})), EvalError);
  CHECK_THROWS_AS(histogram_intersection(hist({1}), Histogram{0.0, 2.0, {1}}), EvalError);
}

TEST_CASE("histogram construction") {
  const Histogram h = make_histogram({0.05, 0.15, 0.15, 0.95, 1.0, -3.0, 7.0}, 0, 1, 10);
  CHECK(std::accumulate(h.mass.begin(), h.mass.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(h.mass[0] == doctest::Approx(2.0 / 7));
  CHECK(h.mass[1] == doctest::Approx(2.0 / 7));
  CHECK(h.mass[9] == doctest::Approx(3.0 / 7));
  CHECK(h.edges().front() == 0.0);
  CHECK(h.edges().back() == doctest::Approx(1.0));
  CHECK_THROWS_AS(make_histogram({}, 0, 1, 10), EvalError);
  CHECK_THROWS_AS(make_histogram({0.5}, 0, 1, 0), EvalError);
  CHECK_THROWS_AS(make_histogram({0.5}, 1, 1, 4), EvalError);
}

TEST_CASE("Lab channel histograms") {
  std::vector<RgbImage> scenes;
  for (int k = 0; k < 4; ++k) scenes.push_back(synthetic_scene(40 + k, 48, 32));
  for (LabChannel ch : {LabChannel::A, LabChannel::B}) {
    const Histogram h = lab_channel_histogram(scenes, ch);
    CHECK(h.bins() == 110);
    CHECK(h.lo == -110.0);
    CHECK(h.hi == 110.0);
    CHECK(std::accumulate(h.mass.begin(), h.mass.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double m : h.mass) CHECK(m >= 0.0);
    auto doubled = scenes;
    doubled.insert(doubled.end(), scenes.begin(), scenes.end());
    CHECK(lab_channel_histogram(doubled, ch).mass == h.mass);
    CHECK(histogram_intersection(h, h) == doctest::Approx(1.0).epsilon(1e-12));
  }
  std::vector<RgbImage> gray;
  for (const auto& s : scenes) gray.push_back(grayscale_replication(s));
  const Histogram g = lab_channel_histogram(gray, LabChannel::A);
  CHECK(g.mass[g.bin_of(0.0)] == 1.0);
  CHECK_THROWS_AS(lab_channel_histogram({}, LabChannel::B), EvalError);
}

TEST_CASE("ms_ssim identities") {
  Rng rng(21);
  const RgbImage x = synthetic_scene(7, 64, 48);
  CHECK(ms_ssim(x, x) == 1.0);
  const RgbImage r = testing::random_rgb(40, 40, rng);
  CHECK(ms_ssim(r, r) == 1.0);
  const RgbImage big = synthetic_scene(8, 160, 128);
  CHECK(ms_ssim(big, big) == 1.0);

  const RgbImage y = perturbed(x, rng, 20);
  const double s = ms_ssim(x, y);
  CHECK(s < 1.0);
  CHECK(s > 0.0);
  CHECK(ms_ssim(y, x) == s);
  CHECK(ms_ssim(swap_channels(x), swap_channels(y)) == s);
  // More noise, lower similarity.
  CHECK(ms_ssim(x, perturbed(x, rng, 60)) < s);
}

TEST_CASE("ms_ssim matches a direct windowed oracle") {
  Rng rng(22);
  for (auto [w, h] : {std::pair{40, 36}, {64, 64}, {130, 128}}) {
    const RgbImage x = synthetic_scene(w + h, w, h);
    const RgbImage y = perturbed(x, rng, 25);
    const int scales = ms_ssim_scales(std::min(w, h));
    double mean = 0;
    for (int c = 0; c < 3; ++c) {
      const double expect = testing::oracle_ms_ssim_plane(testing::rows_of(x, c), testing::rows_of(y, c), scales);
      Plane px(w, h), py(w, h);
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
          px.at(xx, yy) = x.at(xx, yy, c);
          py.at(xx, yy) = y.at(xx, yy, c);
        }
      CHECK(ms_ssim_plane(px, py, scales) == doctest::Approx(expect).epsilon(1e-9));
      mean += expect / 3;
    }
    CHECK(ms_ssim(x, y) == doctest::Approx(mean).epsilon(1e-9));
  }
}

TEST_CASE("ms_ssim scale selection and errors") {
  CHECK(ms_ssim_scales(32) == 3);
  CHECK(ms_ssim_scales(127) == 3);
  CHECK(ms_ssim_scales(128) == 5);
  CHECK_THROWS_AS(ms_ssim_scales(31), EvalError);
  Rng rng(23);
  CHECK_THROWS_AS(ms_ssim(testing::random_rgb(40, 40, rng), testing::random_rgb(40, 41, rng)), EvalError);
  CHECK_THROWS_AS(ms_ssim(testing::random_rgb(24, 40, rng), testing::random_rgb(24, 40, rng)), EvalError);
}

TEST_CASE("diversity report") {
  Rng rng(24);
  const RgbImage a = synthetic_scene(1, 48, 48);
  SUBCASE("duplicated samples concentrate at exactly 1") {
    const DiversityReport r = diversity_report({{"a", {a, a, a}}, {"b", {a, a}}});
    CHECK(r.pair_count() == 3 + 1);
    CHECK(r.identical_pair_count() == 4);
    CHECK(r.histogram.mass.back() == 1.0);
    CHECK(r.images[0].min == 1.0);
  }
  SUBCASE("k samples give k(k-1)/2 pairs") {
    for (int k = 2; k <= 5; ++k) {
      std::vector<RgbImage> s;
      for (int i = 0; i < k; ++i) s.push_back(perturbed(a, rng, 10));
      const DiversityReport r = diversity_report({{"x", s}}, kDiversityBins, 2);
      CHECK(r.images[0].pair_scores.size() == static_cast<std::size_t>(k * (k - 1) / 2));
      CHECK(r.images[0].min <= r.images[0].mean);
      CHECK(r.images[0].mean <= r.images[0].max);
      CHECK(r.images[0].pair_scores[0] == ms_ssim(s[0], s[1]));
    }
  }
  SUBCASE("threads do not change the report") {
    std::vector<SampleSet> sets;
    for (int i = 0; i < 4; ++i) sets.push_back({"i" + std::to_string(i), {perturbed(a, rng, 9), perturbed(a, rng, 9), a}});
    CHECK(diversity_csv(diversity_report(sets, 20, 1)) == diversity_csv(diversity_report(sets, 20, 3)));
    CHECK(diversity_pairs_csv(diversity_report(sets, 20, 1)) == diversity_pairs_csv(diversity_report(sets, 20, 3)));
    const std::string csv = diversity_csv(diversity_report(sets, 20));
    CHECK(csv.rfind("image,pairs,identical_pairs,min,mean,max\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(histogram_csv(diversity_report(sets, 20).histogram).rfind("bin_lo,bin_hi,mass\n", 0) == 0);
  }
  SUBCASE("fewer than two samples") {
    CHECK_THROWS_AS(diversity_report({{"a", {a}}}), EvalError);
    CHECK_THROWS_AS(diversity_report({{"a", {a, a}}, {"b", {}}}), EvalError);
  }
}

TEST_CASE("likelihood ranking") {
  ChromaModel model(ConditioningConfig{}, PixelCnnConfig{}, 31);
  Rng rng(31);
  Tensor features = testing::random_tensor({1, 64, 4, 4}, rng, -2, 2, false);
  std::vector<SeededGrid> samples;
  for (std::uint64_t s = 1; s <= 6; ++s) samples.push_back({s, pixelcnn_sample(model, features, s, 1.0)});

  SUBCASE("single sample ranks as itself") {
    const auto r = rank_samples_by_likelihood(model, features, {samples[0]});
    REQUIRE(r.size() == 1);
    CHECK(r[0].seed == 1);
    CHECK(r[0].grid == samples[0].grid);
  }
  SUBCASE("order agrees with brute-force likelihoods") {
    const auto r = rank_samples_by_likelihood(model, features, samples);
    REQUIRE(r.size() == samples.size());
    for (const auto& item : r) {
      const auto it = std::find_if(samples.begin(), samples.end(), [&](const auto& s) { return s.seed == item.seed; });
      NoGradGuard guard;
      const double nll = pixelcnn_nll(model, {&it->grid}, features).item();
      CHECK(item.log_likelihood == doctest::Approx(-nll * 32).epsilon(1e-12));
    }
    for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i - 1].log_likelihood >= r[i].log_likelihood);
  }
  SUBCASE("input order does not matter") {
    auto shuffled = samples;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[1], shuffled[4]);
    const auto a = rank_samples_by_likelihood(model, features, samples);
    const auto b = rank_samples_by_likelihood(model, features, shuffled);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].seed == b[i].seed);
  }
  SUBCASE("ties fall back to seed order") {
    std::vector<SeededGrid> same{{9, samples[0].grid}, {3, samples[0].grid}, {5, samples[0].grid}};
    const auto r = rank_samples_by_likelihood(model, features, same);
    CHECK(r[0].seed == 3);
    CHECK(r[1].seed == 5);
    CHECK(r[2].seed == 9);
  }
  SUBCASE("greedy decode outranks random samples here") {
    auto with_greedy = samples;
    with_greedy.push_back({0, pixelcnn_sample(model, features, 0, 0.0)});
    const auto r = rank_samples_by_likelihood(model, features, with_greedy);
    CHECK(r[0].seed == 0);
  }
}

TEST_CASE("VTT manifest") {
  const auto root = testing::scratch_dir("vtt");
  const auto gen = root / "gen", gt = root / "gt";
  std::filesystem::create_directories(gen);
  std::filesystem::create_directories(gt);
  const RgbImage tiny(2, 2, 9);
  for (int i = 0; i < 500; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "im%03d", i);
    write_png(gt / (std::string(name) + ".png"), tiny);
    write_png(gen / (std::string(name) + "_seed1.png"), tiny);
  }
  write_png(gen / "orphan_seed1.png", tiny);
  write_png(gt / "lonely.png", tiny);

  std::ostringstream log;
  const VttManifest m = export_vtt_manifest(gen, gt, 17, "_seed1", log);
  CHECK(m.entries.size() == 500);
  CHECK(m.display_seconds == 1);
  CHECK(m.raters == 5);
  CHECK(m.unmatched.size() == 2);
  CHECK(log.str().find("orphan") != std::string::npos);

  const std::size_t gt_first = std::count_if(m.entries.begin(), m.entries.end(), [](const auto& e) { return e.gt_is_a; });
  // Binomial(500, 1/2): three standard deviations is about 33.5.
  CHECK(std::abs(static_cast<double>(gt_first) - 250.0) <= 3 * std::sqrt(500 * 0.25));
  for (const auto& e : m.entries) {
    const std::string gt_path = e.gt_is_a ? e.path_a : e.path_b;
    const std::string gen_path = e.gt_is_a ? e.path_b : e.path_a;
    CHECK(gt_path.find("/gt/") != std::string::npos);
    CHECK(gen_path.find("_seed1.png") != std::string::npos);
  }

  const std::string jsonl = vtt_manifest_jsonl(m);
  std::istringstream lines(jsonl);
  std::string line;
  int n = 0;
  std::set<std::string> ids;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("display_seconds") == 1);
    CHECK(j.at("raters") == 5);
    CHECK(j.at("order") == n);
    CHECK(j.contains("path_a"));
    CHECK(j.contains("path_b"));
    CHECK(j.at("gt_is_a").is_boolean());
    ids.insert(j.at("id").get<std::string>());
    ++n;
  }
  CHECK(n == 500);
  CHECK(ids.size() == 500);

  std::ostringstream quiet;
  CHECK(vtt_manifest_jsonl(export_vtt_manifest(gen, gt, 17, "_seed1", quiet)) == jsonl);
  CHECK(vtt_manifest_jsonl(export_vtt_manifest(gen, gt, 18, "_seed1", quiet)) != jsonl);

  // Relative paths resolve from the base directory.
  const std::filesystem::path base = gen / "sub";
  std::filesystem::create_directories(base);
  std::istringstream rel(vtt_manifest_jsonl(m, base));
  std::getline(rel, line);
  const auto first = nlohmann::json::parse(line);
  const std::string a = first.at("path_a");
  CHECK(a.starts_with(".."));
  CHECK(std::filesystem::equivalent(base / a, m.entries[0].path_a));
}
