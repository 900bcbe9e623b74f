#include "pixcolor/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace pixcolor {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("config: bad value for " + key + ": '" + text + "'");
  }
  return value;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct KeyHandler {
  std::string key;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
  bool echoed;
};

template <class T>
KeyHandler number_key(std::string key, T TrainConfig::*field) {
  return {key,
          [key, field](TrainConfig& c, const std::string& v) { c.*field = parse_number<T>(key, v); },
          [field](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*field);
            } else {
              return std::to_string(c.*field);
            }
          },
          true};
}

KeyHandler path_key(std::string key, std::string TrainConfig::*field) {
  return {key, [field](TrainConfig& c, const std::string& v) { c.*field = v; },
          [field](const TrainConfig& c) { return c.*field; }, false};
}

const std::vector<KeyHandler>& handlers() {
  static const std::vector<KeyHandler> table = [] {
    std::vector<KeyHandler> t;
    t.push_back(number_key("learning_rate", &TrainConfig::learning_rate));
    t.push_back(number_key("batch_size", &TrainConfig::batch_size));
    t.push_back(number_key("iterations", &TrainConfig::iterations));
    t.push_back(number_key("seed", &TrainConfig::seed));
    t.push_back(number_key("colorness_threshold", &TrainConfig::colorness_threshold));
    t.push_back(number_key("image_side", &TrainConfig::image_side));
    t.push_back(number_key("chroma_side", &TrainConfig::chroma_side));
    t.push_back(number_key("width_multiplier", &TrainConfig::width_multiplier));
    t.push_back({"conditioning_blocks",
                 [](TrainConfig& c, const std::string& v) {
                   std::array<int, 3> blocks{};
                   std::istringstream is(v);
                   std::string part;
                   int i = 0;
                   while (std::getline(is, part, ',')) {
                     if (i >= 3) throw ConfigError("config: conditioning_blocks takes 3 values");
                     blocks[i++] = parse_number<int>("conditioning_blocks", trim(part));
                   }
                   if (i != 3) throw ConfigError("config: conditioning_blocks takes 3 values");
                   c.conditioning_blocks = blocks;
                 },
                 [](const TrainConfig& c) {
                   return std::to_string(c.conditioning_blocks[0]) + "," +
                          std::to_string(c.conditioning_blocks[1]) + "," +
                          std::to_string(c.conditioning_blocks[2]);
                 },
                 true});
    t.push_back(number_key("gated_blocks", &TrainConfig::gated_blocks));
    t.push_back(number_key("grad_multiplier_gamma", &TrainConfig::grad_multiplier_gamma));
    t.push_back(number_key("grad_multiplier_start", &TrainConfig::grad_multiplier_start));
    t.push_back(number_key("checkpoint_every", &TrainConfig::checkpoint_every));
    t.push_back(number_key("temperature", &TrainConfig::temperature));
    t.push_back(path_key("data_dir", &TrainConfig::data_dir));
    t.push_back(path_key("out_dir", &TrainConfig::out_dir));
    return t;
  }();
  return table;
}

const KeyHandler& handler(const std::string& key) {
  for (const auto& h : handlers()) {
    if (h.key == key) return h;
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size <= 0) throw ConfigError("batch_size must be > 0");
  if (iterations <= 0) throw ConfigError("iterations must be > 0");
  if (checkpoint_every <= 0) throw ConfigError("checkpoint_every must be > 0");
  if (colorness_threshold < 0 || colorness_threshold > 1) {
    throw ConfigError("colorness_threshold must lie in [0,1]");
  }
  if (chroma_side <= 0 || image_side != 8 * chroma_side) {
    throw ConfigError("image_side must equal 8 * chroma_side (got " + std::to_string(image_side) +
                      " and " + std::to_string(chroma_side) + ")");
  }
  if (!(width_multiplier > 0)) throw ConfigError("width_multiplier must be > 0");
  for (int b : conditioning_blocks) {
    if (b < 1) throw ConfigError("conditioning_blocks entries must be >= 1");
  }
  if (gated_blocks < 0) throw ConfigError("gated_blocks must be >= 0");
  if (grad_multiplier_start < 0) throw ConfigError("grad_multiplier_start must be >= 0");
  if (temperature < 0) throw ConfigError("temperature must be >= 0");
}

ConditioningConfig TrainConfig::conditioning() const {
  ConditioningConfig c;
  c.width_multiplier = width_multiplier;
  c.block_counts = conditioning_blocks;
  c.gradient_multiplier_gamma = grad_multiplier_gamma;
  c.gradient_multiplier_start_step = grad_multiplier_start;
  return c;
}

PixelCnnConfig TrainConfig::pixelcnn() const {
  PixelCnnConfig c;
  c.width_multiplier = width_multiplier;
  c.gated_blocks = gated_blocks;
  return c;
}

RefinementConfig TrainConfig::refinement() const {
  RefinementConfig c;
  c.width_multiplier = width_multiplier;
  return c;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& h : handlers()) k.push_back(h.key);
    return k;
  }();
  return keys;
}

void set_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
  handler(key).set(config, value);
}

std::string get_config_value(const TrainConfig& config, const std::string& key) {
  return handler(key).get(config);
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

void apply_config_text(TrainConfig& config, const std::string& text) {
  for (const auto& [key, value] : parse_config_text(text)) set_config_value(config, key, value);
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  TrainConfig config;
  apply_config_text(config, buf.str());
  return config;
}

std::string config_echo(const TrainConfig& config) {
  std::string out;
  for (const auto& h : handlers()) {
    if (h.echoed) out += h.key + " = " + h.get(config) + "\n";
  }
  return out;
}

}  // namespace pixcolor
