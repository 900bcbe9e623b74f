#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixcolor/nn.hpp"
#include "pixcolor/optim.hpp"

namespace pixcolor {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  Shape shape;
  std::vector<float> values;
  bool operator==(const TensorRecord&) const = default;
};

/// On-disk layout (all integers little-endian):
///   "PXCL" | u32 version | u32 count | count x record        (parameters)
///   i64 adam_step | u32 count | count x record               (moments)
///   u32 length | config echo bytes | u32 CRC-32 of all preceding bytes
/// record = u32 name length | name | u32 rank | rank x u32 extent |
///          extent-product x f32.
/// Moments are stored as "adam.m/<param>" then "adam.v/<param>" per
/// parameter, or omitted (count 0) for weights-only files.
struct ModelCheckpoint {
  std::vector<TensorRecord> params;
  std::int64_t adam_step = 0;
  std::vector<TensorRecord> moments;
  std::string config;
  bool operator==(const ModelCheckpoint&) const = default;
};

std::vector<std::uint8_t> serialize_checkpoint(const ModelCheckpoint& ckpt);
ModelCheckpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Captures parameters (and optionally Adam state) at 32-bit precision. The
/// live values are rounded to 32-bit as well so a run that continues from
/// here is bit-identical to one resumed from the file.
ModelCheckpoint snapshot_checkpoint(ParameterSet& params, AdamState* adam,
                                    const std::string& config);

/// Copies a checkpoint into live parameters. The checkpoint must name every
/// parameter exactly once and nothing else.
void restore_checkpoint(const ModelCheckpoint& ckpt, ParameterSet& params, AdamState* adam);

}  // namespace pixcolor
