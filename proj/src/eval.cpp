#include "pixcolor/eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "pixcolor/colorspace.hpp"
#include "pixcolor/dataset.hpp"
#include "pixcolor/rng.hpp"

namespace pixcolor {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

constexpr std::array<double, 5> kScaleWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) w[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= s;
  return w;
}

// Separable "valid" filtering.
Plane filter_valid(const Plane& p, const std::vector<double>& w) {
  const int k = static_cast<int>(w.size());
  const int ow = p.width - k + 1, oh = p.height - k + 1;
  Plane rows(ow, p.height);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += w[i] * p.at(x + i, y);
      rows.at(x, y) = acc;
    }
  }
  Plane out(ow, oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += w[i] * rows.at(x, y + i);
      out.at(x, y) = acc;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out(a.width, a.height);
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = a.values[i] * b.values[i];
  return out;
}

Plane halve(const Plane& p) {
  Plane out(p.width / 2, p.height / 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      out.at(x, y) = (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) +
                      p.at(2 * x + 1, 2 * y + 1)) /
                     4.0;
    }
  }
  return out;
}

// Mean contrast-structure and mean SSIM at one scale.
std::array<double, 2> ssim_terms(const Plane& x, const Plane& y) {
  constexpr double L = 255.0, C1 = (0.01 * L) * (0.01 * L), C2 = (0.03 * L) * (0.03 * L);
  int size = std::min({11, x.width, x.height});
  if (size % 2 == 0) --size;
  const auto w = gaussian_window(size, 1.5);
  const Plane mx = filter_valid(x, w), my = filter_valid(y, w);
  const Plane exx = filter_valid(product(x, x), w), eyy = filter_valid(product(y, y), w),
              exy = filter_valid(product(x, y), w);
  double cs_sum = 0.0, ssim_sum = 0.0;
  for (std::size_t i = 0; i < mx.values.size(); ++i) {
    const double a = mx.values[i], b = my.values[i];
    const double vx = exx.values[i] - a * a, vy = eyy.values[i] - b * b;
    const double cov = exy.values[i] - a * b;
    const double cs = (2.0 * cov + C2) / (vx + vy + C2);
    cs_sum += cs;
    ssim_sum += (2.0 * a * b + C1) / (a * a + b * b + C1) * cs;
  }
  const double n = static_cast<double>(mx.values.size());
  return {cs_sum / n, ssim_sum / n};
}

Plane rgb_channel(const RgbImage& img, int c) {
  Plane p(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) p.at(x, y) = img.at(x, y, c);
  }
  return p;
}

}  // namespace

std::vector<double> Histogram::edges() const {
  std::vector<double> e(mass.size() + 1);
  for (std::size_t i = 0; i <= mass.size(); ++i) e[i] = lo + bin_width() * static_cast<double>(i);
  return e;
}

std::size_t Histogram::bin_of(double v) const {
  const double t = std::floor((v - lo) / bin_width());
  if (!(t > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(t), mass.size() - 1);
}

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins) {
  if (bins <= 0 || !(hi > lo)) throw EvalError("histogram needs bins > 0 and hi > lo");
  if (values.empty()) throw EvalError("histogram of an empty set");
  Histogram h{lo, hi, std::vector<double>(bins, 0.0)};
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) ++counts[h.bin_of(v)];
  for (int i = 0; i < bins; ++i) {
    h.mass[i] = static_cast<double>(counts[i]) / static_cast<double>(values.size());
  }
  return h;
}

Histogram lab_channel_histogram(const std::vector<RgbImage>& images, LabChannel channel, int bins) {
  if (images.empty()) throw EvalError("lab_channel_histogram: empty image set");
  std::vector<double> values;
  for (const auto& img : images) {
    const LabPlanes lab = rgb_to_lab(img);
    const Plane& p = channel == LabChannel::A ? lab.a : lab.b;
    values.insert(values.end(), p.values.begin(), p.values.end());
  }
  return make_histogram(values, -kLabRange, kLabRange, bins);
}

double histogram_intersection(const Histogram& h1, const Histogram& h2) {
  if (h1.lo != h2.lo || h1.hi != h2.hi || h1.bins() != h2.bins()) {
    throw EvalError("histogram_intersection: bin edges differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < h1.bins(); ++i) s += std::min(h1.mass[i], h2.mass[i]);
  return s;
}

int ms_ssim_scales(int side) {
  if (side >= 128) return 5;
  if (side >= 32) return 3;
  throw EvalError("ms_ssim: smaller side " + std::to_string(side) + " is below 32");
}

double ms_ssim_plane(const Plane& x, const Plane& y, int scales) {
  if (x.width != y.width || x.height != y.height) throw EvalError("ms_ssim: dimension mismatch");
  if (scales < 1 || scales > static_cast<int>(kScaleWeights.size())) {
    throw EvalError("ms_ssim: unsupported scale count");
  }
  if (std::min(x.width, x.height) >> (scales - 1) < 1) throw EvalError("ms_ssim: image too small");
  const double wsum = std::accumulate(kScaleWeights.begin(), kScaleWeights.begin() + scales, 0.0);
  Plane a = x, b = y;
  double result = 1.0;
  for (int s = 0; s < scales; ++s) {
    const auto [cs, ssim] = ssim_terms(a, b);
    const double term = s + 1 == scales ? ssim : cs;
    result *= std::pow(std::max(term, 0.0), kScaleWeights[s] / wsum);
    if (s + 1 < scales) {
      a = halve(a);
      b = halve(b);
    }
  }
  return result;
}

double ms_ssim(const RgbImage& img1, const RgbImage& img2) {
  if (img1.width != img2.width || img1.height != img2.height) {
    throw EvalError("ms_ssim: dimension mismatch");
  }
  const int scales = ms_ssim_scales(std::min(img1.width, img1.height));
  std::array<double, 3> per{};
  for (int c = 0; c < 3; ++c) per[c] = ms_ssim_plane(rgb_channel(img1, c), rgb_channel(img2, c), scales);
  // Summing in sorted order keeps the mean independent of channel order.
  std::sort(per.begin(), per.end());
  return (per[0] + per[1] + per[2]) / 3.0;
}

std::size_t DiversityReport::pair_count() const {
  std::size_t n = 0;
  for (const auto& im : images) n += im.pair_scores.size();
  return n;
}

std::size_t DiversityReport::identical_pair_count() const {
  std::size_t n = 0;
  for (const auto& im : images) n += im.identical_pairs;
  return n;
}

DiversityReport diversity_report(const std::vector<SampleSet>& sets, int bins, int threads) {
  if (sets.empty()) throw EvalError("diversity_report: no images");
  struct Job {
    std::size_t set, a, b;
  };
  std::vector<Job> jobs;
  DiversityReport report;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto& samples = sets[s].samples;
    if (samples.size() < 2) {
      throw EvalError("diversity_report: image " + sets[s].name + " has fewer than 2 samples");
    }
    ImageDiversity im;
    im.name = sets[s].name;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t j = i + 1; j < samples.size(); ++j) jobs.push_back({s, i, j});
    }
    im.pair_scores.assign(samples.size() * (samples.size() - 1) / 2, 0.0);
    report.images.push_back(std::move(im));
  }

  std::vector<double> scores(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  auto worker = [&] {
    try {
      for (std::size_t k = next++; k < jobs.size(); k = next++) {
        const auto& j = jobs[k];
        scores[k] = ms_ssim(sets[j.set].samples[j.a], sets[j.set].samples[j.b]);
      }
    } catch (...) {
      error = std::current_exception();
    }
  };
  const int n_threads = std::clamp<int>(threads, 1, static_cast<int>(jobs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  std::size_t k = 0;
  for (auto& im : report.images) {
    for (auto& v : im.pair_scores) v = scores[k++];
    im.min = *std::min_element(im.pair_scores.begin(), im.pair_scores.end());
    im.max = *std::max_element(im.pair_scores.begin(), im.pair_scores.end());
    im.mean = std::accumulate(im.pair_scores.begin(), im.pair_scores.end(), 0.0) /
              static_cast<double>(im.pair_scores.size());
    im.identical_pairs = static_cast<std::size_t>(
        std::count(im.pair_scores.begin(), im.pair_scores.end(), 1.0));
  }
  report.histogram = make_histogram(scores, 0.0, 1.0, bins);
  return report;
}

std::string diversity_csv(const DiversityReport& report) {
  std::ostringstream out;
  out << "image,pairs,identical_pairs,min,mean,max\n";
  for (const auto& im : report.images) {
    out << im.name << ',' << im.pair_scores.size() << ',' << im.identical_pairs << ','
        << fmt(im.min) << ',' << fmt(im.mean) << ',' << fmt(im.max) << '\n';
  }
  return out.str();
}

std::string diversity_pairs_csv(const DiversityReport& report) {
  std::ostringstream out;
  out << "image,pair_a,pair_b,ms_ssim\n";
  for (const auto& im : report.images) {
    std::size_t k = 0;
    // Recover the sample count from the pair count.
    std::size_t n = 2;
    while (n * (n - 1) / 2 < im.pair_scores.size()) ++n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        out << im.name << ',' << i << ',' << j << ',' << fmt(im.pair_scores[k++]) << '\n';
      }
    }
  }
  return out.str();
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,mass\n";
  const auto e = h.edges();
  for (std::size_t i = 0; i < h.bins(); ++i) {
    out << fmt(e[i]) << ',' << fmt(e[i + 1]) << ',' << fmt(h.mass[i]) << '\n';
  }
  return out.str();
}

std::vector<RankedSample> rank_samples_by_likelihood(const ChromaModel& model,
                                                     const Tensor& features,
                                                     const std::vector<SeededGrid>& samples) {
  std::vector<RankedSample> ranked;
  ranked.reserve(samples.size());
  NoGradGuard guard;
  for (const auto& s : samples) {
    ranked.push_back({s.seed, s.grid, sample_log_likelihood(model, s.grid, features)});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedSample& a, const RankedSample& b) {
    if (a.log_likelihood != b.log_likelihood) return a.log_likelihood > b.log_likelihood;
    return a.seed < b.seed;
  });
  return ranked;
}

VttManifest export_vtt_manifest(const std::filesystem::path& generated_dir,
                                const std::filesystem::path& groundtruth_dir, std::uint64_t seed,
                                const std::string& suffix, std::ostream& log) {
  std::map<std::string, std::filesystem::path> generated, truth;
  for (const auto& p : list_png_files(generated_dir)) {
    const std::string stem = p.stem().string();
    if (stem.size() >= suffix.size() && stem.ends_with(suffix)) {
      generated[stem.substr(0, stem.size() - suffix.size())] = p;
    }
  }
  for (const auto& p : list_png_files(groundtruth_dir)) truth[p.stem().string()] = p;

  VttManifest manifest;
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> matched;
  for (const auto& [stem, path] : truth) {
    auto it = generated.find(stem);
    if (it == generated.end()) {
      manifest.unmatched.push_back(stem);
    } else {
      matched.push_back({stem, {it->second.string(), path.string()}});
    }
  }
  for (const auto& [stem, path] : generated) {
    if (!truth.contains(stem)) manifest.unmatched.push_back(stem + suffix);
  }
  std::sort(manifest.unmatched.begin(), manifest.unmatched.end());
  for (const auto& u : manifest.unmatched) log << "warning: unmatched image " << u << " skipped\n";

  Rng side_rng(derive_seed(seed, 0));
  std::vector<VttEntry> entries;
  for (const auto& [stem, paths] : matched) {
    VttEntry e;
    e.id = stem;
    e.gt_is_a = side_rng.below(2) == 1;
    e.path_a = e.gt_is_a ? paths.second : paths.first;
    e.path_b = e.gt_is_a ? paths.first : paths.second;
    entries.push_back(std::move(e));
  }
  Rng order_rng(derive_seed(seed, 1));
  for (std::size_t i = entries.size(); i > 1; --i) {
    std::swap(entries[i - 1], entries[order_rng.below(i)]);
  }
  manifest.entries = std::move(entries);
  return manifest;
}

std::string vtt_manifest_jsonl(const VttManifest& manifest, const std::filesystem::path& base) {
  namespace fs = std::filesystem;
  auto shown = [&](const std::string& p) {
    if (base.empty()) return p;
    return fs::weakly_canonical(p).lexically_relative(fs::weakly_canonical(base)).generic_string();
  };
  std::string out;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["order"] = i;
    j["path_a"] = shown(e.path_a);
    j["path_b"] = shown(e.path_b);
    j["gt_is_a"] = e.gt_is_a;
    j["display_seconds"] = manifest.display_seconds;
    j["raters"] = manifest.raters;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace pixcolor
