#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixcolor/config.hpp"
#include "pixcolor/image.hpp"

namespace pixcolor {

/// One training image after cropping, resizing and colour conversion.
struct Example {
  std::string name;
  RgbImage rgb;
  YccImage ycc;     // ycc.y is the grayscale input
  ChromaGrid grid;  // quantize(downsample_chroma(ycc, chroma_side))
  double colorness = 0.0;

  const Plane& gray() const { return ycc.y; }
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean over pixels of max(|Cb - 128|, |Cr - 128|) / 128.
double colorness(const YccImage& img);

/// Largest centred square.
RgbImage center_crop_square(const RgbImage& img);

/// Area-average resize of all three channels, rounded back to 8 bits.
RgbImage area_resize_rgb(const RgbImage& img, int out_w, int out_h);

/// Crop, resize to `image_side`, convert and quantise.
Example make_example(std::string name, const RgbImage& img, int image_side, int chroma_side);

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Example> examples) : examples_(std::move(examples)) {}

  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const Example& operator[](std::size_t i) const { return examples_.at(i); }
  const std::vector<Example>& examples() const { return examples_; }

  /// Permutation used for `epoch`, a pure function of (size, seed, epoch).
  std::vector<std::size_t> epoch_order(std::uint64_t seed, std::uint64_t epoch) const;

  /// Example indices for a training step: positions step * batch ... in the
  /// concatenation of successive epoch orders.
  std::vector<std::size_t> batch_indices(std::int64_t step, int batch_size,
                                         std::uint64_t seed) const;

 private:
  std::vector<Example> examples_;
};

struct IngestStats {
  std::size_t files = 0;
  std::size_t unreadable = 0;
  std::size_t filtered = 0;
};

/// Loads every *.png under `dir` (sorted by file name). Unreadable files are
/// skipped with a warning on `log`; images below the colourness threshold are
/// dropped. Throws DatasetError if nothing usable remains.
Dataset ingest_dataset(const std::filesystem::path& dir, const TrainConfig& config,
                       std::ostream& log, IngestStats* stats = nullptr);

/// Sorted *.png files directly inside `dir`.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);

}  // namespace pixcolor
