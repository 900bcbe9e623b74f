#include "pixcolor/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "pixcolor/colorspace.hpp"
#include "pixcolor/rng.hpp"

namespace pixcolor {

double colorness(const YccImage& img) {
  const std::size_t n = img.y.size();
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::max(std::abs(img.cb.values[i] - 128.0), std::abs(img.cr.values[i] - 128.0));
  }
  return acc / static_cast<double>(n) / 128.0;
}

RgbImage center_crop_square(const RgbImage& img) {
  const int side = std::min(img.width, img.height);
  const int x0 = (img.width - side) / 2, y0 = (img.height - side) / 2;
  RgbImage out(side, side);
  for (int y = 0; y < side; ++y) {
    std::copy_n(img.pixels.begin() + ((static_cast<std::size_t>(y + y0) * img.width + x0) * 3),
                side * 3, out.pixels.begin() + static_cast<std::size_t>(y) * side * 3);
  }
  return out;
}

RgbImage area_resize_rgb(const RgbImage& img, int out_w, int out_h) {
  RgbImage out(out_w, out_h);
  for (int c = 0; c < 3; ++c) {
    Plane p(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) p.at(x, y) = img.at(x, y, c);
    }
    const Plane r = area_resize(p, out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        out.at(x, y, c) =
            static_cast<std::uint8_t>(std::clamp(std::lround(r.at(x, y)), 0L, 255L));
      }
    }
  }
  return out;
}

Example make_example(std::string name, const RgbImage& img, int image_side, int chroma_side) {
  Example ex;
  ex.name = std::move(name);
  RgbImage square = center_crop_square(img);
  ex.rgb = square.width == image_side ? std::move(square)
                                      : area_resize_rgb(square, image_side, image_side);
  ex.ycc = rgb_to_ycc(ex.rgb);
  ex.grid = quantize_grid(downsample_chroma(ex.ycc, chroma_side));
  ex.colorness = colorness(ex.ycc);
  return ex;
}

std::vector<std::size_t> Dataset::epoch_order(std::uint64_t seed, std::uint64_t epoch) const {
  std::vector<std::size_t> order(examples_.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, epoch));
  // Fisher-Yates.
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  return order;
}

std::vector<std::size_t> Dataset::batch_indices(std::int64_t step, int batch_size,
                                                std::uint64_t seed) const {
  if (examples_.empty()) throw DatasetError("empty dataset");
  const std::uint64_t n = examples_.size();
  std::vector<std::size_t> out;
  std::uint64_t cached_epoch = ~0ULL;
  std::vector<std::size_t> order;
  for (int k = 0; k < batch_size; ++k) {
    const std::uint64_t pos = static_cast<std::uint64_t>(step) * batch_size + k;
    const std::uint64_t epoch = pos / n;
    if (epoch != cached_epoch) {
      order = epoch_order(seed, epoch);
      cached_epoch = epoch;
    }
    out.push_back(order[pos % n]);
  }
  return out;
}

std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DatasetError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Dataset ingest_dataset(const std::filesystem::path& dir, const TrainConfig& config,
                       std::ostream& log, IngestStats* stats) {
  IngestStats local;
  std::vector<Example> examples;
  for (const auto& path : list_png_files(dir)) {
    ++local.files;
    RgbImage img;
    try {
      img = read_png(path);
    } catch (const ImageIoError& e) {
      ++local.unreadable;
      log << "warning: skipping " << path.string() << ": " << e.what() << "\n";
      continue;
    }
    if (std::min(img.width, img.height) < config.chroma_side) {
      ++local.unreadable;
      log << "warning: skipping " << path.string() << ": smaller than the chroma grid\n";
      continue;
    }
    Example ex = make_example(path.stem().string(), img, config.image_side, config.chroma_side);
    if (ex.colorness < config.colorness_threshold) {
      ++local.filtered;
      continue;
    }
    examples.push_back(std::move(ex));
  }
  if (stats) *stats = local;
  if (examples.empty()) {
    throw DatasetError("no usable images in " + dir.string() + " (" + std::to_string(local.files) +
                       " files, " + std::to_string(local.filtered) + " below colorness threshold)");
  }
  return Dataset(std::move(examples));
}

}  // namespace pixcolor
