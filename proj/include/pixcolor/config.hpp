#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pixcolor/conditioning.hpp"
#include "pixcolor/pixelcnn.hpp"
#include "pixcolor/refinement.hpp"

namespace pixcolor {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Run configuration shared by both trainers and the CLI. Defaults are the
/// desk-scale settings; the full-scale values are all expressible.
struct TrainConfig {
  double learning_rate = 0.0003;
  int batch_size = 8;
  std::int64_t iterations = 2000;
  std::uint64_t seed = 1;
  double colorness_threshold = 0.05;
  int image_side = 64;
  int chroma_side = 8;
  double width_multiplier = 0.25;
  std::array<int, 3> conditioning_blocks{1, 1, 2};
  int gated_blocks = 10;
  double grad_multiplier_gamma = 0.1;
  std::int64_t grad_multiplier_start = 500;
  std::int64_t checkpoint_every = 500;
  double temperature = 1.0;
  std::string data_dir;
  std::string out_dir = ".";

  void validate() const;

  ConditioningConfig conditioning() const;
  PixelCnnConfig pixelcnn() const;
  RefinementConfig refinement() const;
};

/// Every recognised key, in canonical order.
const std::vector<std::string>& config_keys();

/// Sets one key from its textual value; unknown keys and malformed values
/// throw ConfigError.
void set_config_value(TrainConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const TrainConfig& config, const std::string& key);

/// Parses `key = value` lines (blank lines and `#` comments ignored).
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

void apply_config_text(TrainConfig& config, const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);

/// Model and optimisation keys (no filesystem paths) as `key = value` lines.
/// Stored in checkpoints so a model can be rebuilt from its file alone.
std::string config_echo(const TrainConfig& config);

}  // namespace pixcolor
