#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pixcolor/image.hpp"

namespace pixcolor {

/// Procedural outdoor-like scenes: a sky over textured ground with a few
/// smooth objects. Sky and ground colours follow from brightness and texture;
/// object colours are drawn freely, so the colouring is partly ambiguous.
RgbImage synthetic_scene(std::uint64_t seed, int width, int height);

struct CorpusSpec {
  int count = 240;
  int width = 64;
  int height = 64;
  int gray_every = 12;  // every n-th image is stored as grey (0: none)
  std::uint64_t seed = 1;
  std::string prefix = "img";
};

/// Writes `<prefix>_<index>.png` files; returns their paths.
std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& dir,
                                                          const CorpusSpec& spec);

}  // namespace pixcolor
