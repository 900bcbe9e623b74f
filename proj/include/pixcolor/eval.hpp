#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixcolor/image.hpp"
#include "pixcolor/pixelcnn.hpp"

namespace pixcolor {

class EvalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform bins over [lo, hi]; values outside are counted in the edge bins.
struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> mass;  // normalised

  std::size_t bins() const { return mass.size(); }
  double bin_width() const { return (hi - lo) / static_cast<double>(mass.size()); }
  std::vector<double> edges() const;
  /// Bin holding `v` (the top edge belongs to the last bin).
  std::size_t bin_of(double v) const;
};

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins);

enum class LabChannel { A, B };

inline constexpr double kLabRange = 110.0;
inline constexpr int kLabBins = 110;

/// Pooled per-pixel histogram of a or b over [-110, 110].
Histogram lab_channel_histogram(const std::vector<RgbImage>& images, LabChannel channel,
                                int bins = kLabBins);

/// Sum of elementwise minima. Throws EvalError when the bin edges differ.
double histogram_intersection(const Histogram& h1, const Histogram& h2);

/// Number of scales used for an image whose smaller side is `side`: 5 from
/// 128 up, 3 from 32 up; smaller images throw EvalError.
int ms_ssim_scales(int side);

/// Multiscale SSIM on each RGB channel, averaged.
double ms_ssim(const RgbImage& img1, const RgbImage& img2);

/// MS-SSIM of one real-valued channel with an explicit scale count.
double ms_ssim_plane(const Plane& x, const Plane& y, int scales);

struct ImageDiversity {
  std::string name;
  std::vector<double> pair_scores;  // (0,1),(0,2)...,(1,2)... order
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
  std::size_t identical_pairs = 0;  // scores exactly 1
};

struct DiversityReport {
  std::vector<ImageDiversity> images;
  Histogram histogram;  // pooled pair scores over [0, 1]

  std::size_t pair_count() const;
  std::size_t identical_pair_count() const;
};

struct SampleSet {
  std::string name;
  std::vector<RgbImage> samples;
};

inline constexpr int kDiversityBins = 100;

/// Scores all unordered sample pairs of every image. Fewer than two samples
/// for any image throws EvalError.
DiversityReport diversity_report(const std::vector<SampleSet>& sets, int bins = kDiversityBins,
                                 int threads = 1);

/// image,pairs,identical_pairs,min,mean,max
std::string diversity_csv(const DiversityReport& report);
/// image,pair_a,pair_b,ms_ssim
std::string diversity_pairs_csv(const DiversityReport& report);
/// bin_lo,bin_hi,mass
std::string histogram_csv(const Histogram& h);

struct SeededGrid {
  std::uint64_t seed = 0;
  ChromaGrid grid;
};

struct RankedSample {
  std::uint64_t seed = 0;
  ChromaGrid grid;
  double log_likelihood = 0.0;
};

/// Descending model log-likelihood; equal scores keep ascending seed order.
std::vector<RankedSample> rank_samples_by_likelihood(const ChromaModel& model,
                                                     const Tensor& features,
                                                     const std::vector<SeededGrid>& samples);

struct VttEntry {
  std::string id;
  std::string path_a;
  std::string path_b;
  bool gt_is_a = false;
};

struct VttManifest {
  std::vector<VttEntry> entries;  // presentation order
  int display_seconds = 1;
  int raters = 5;
  std::vector<std::string> unmatched;
};

/// Pairs `<stem><suffix>.png` in `generated_dir` with `<stem>.png` in
/// `groundtruth_dir`. The ground-truth side and the presentation order are
/// drawn from `seed`. Unmatched stems are reported on `log` and skipped.
VttManifest export_vtt_manifest(const std::filesystem::path& generated_dir,
                                const std::filesystem::path& groundtruth_dir, std::uint64_t seed,
                                const std::string& suffix, std::ostream& log);

/// JSON lines: id, order, path_a, path_b, gt_is_a, display_seconds, raters.
/// With a non-empty `base`, paths are written relative to it.
std::string vtt_manifest_jsonl(const VttManifest& manifest, const std::filesystem::path& base = {});

}  // namespace pixcolor
