#include "pixcolor/cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "pixcolor/checkpoint.hpp"
#include "pixcolor/colorize.hpp"
#include "pixcolor/colorspace.hpp"
#include "pixcolor/config.hpp"
#include "pixcolor/dataset.hpp"
#include "pixcolor/eval.hpp"
#include "pixcolor/train.hpp"

namespace pixcolor {

namespace fs = std::filesystem;

namespace {

class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

// Config file plus per-key flag overrides shared by the subcommands that
// consume a TrainConfig.
struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value config file (flags take precedence)");
    for (const auto& key : config_keys()) {
      app->add_option_function<std::string>(
          "--" + dashed(key), [this, key](const std::string& v) { overrides[key] = v; },
          "override config key " + key);
    }
  }

  TrainConfig resolve() const {
    TrainConfig config;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw RuntimeFailure("config file not found: " + config_path);
      config = load_config(config_path);
    }
    for (const auto& [k, v] : overrides) set_config_value(config, k, v);
    config.validate();
    return config;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << text;
  if (!out) throw RuntimeFailure("failed writing " + path.string());
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw RuntimeFailure(what + " not found: " + path.string());
}

void require_dir(const fs::path& path, const std::string& what) {
  if (!fs::is_directory(path)) throw RuntimeFailure(what + " not found: " + path.string());
}

// Files given directly, or every PNG inside given directories.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (auto& p : list_png_files(in)) files.push_back(p);
    } else {
      require_file(in, "input image");
      files.emplace_back(in);
    }
  }
  return files;
}

std::vector<RgbImage> read_images(const std::vector<fs::path>& files) {
  std::vector<RgbImage> images;
  for (const auto& f : files) images.push_back(read_png(f));
  return images;
}

std::vector<fs::path> pngs_with_suffix(const fs::path& dir, const std::string& suffix) {
  std::vector<fs::path> out;
  for (auto& p : list_png_files(dir)) {
    if (p.stem().string().ends_with(suffix)) out.push_back(p);
  }
  return out;
}

template <class Trainer>
int run_train(const TrainConfig& config, const std::string& resume, const std::string& name,
              std::ostream& out, std::ostream& err) {
  if (config.data_dir.empty()) throw RuntimeFailure("no data directory given (--data-dir)");
  require_dir(config.data_dir, "data directory");
  fs::create_directories(config.out_dir);
  IngestStats stats;
  const Dataset data = ingest_dataset(config.data_dir, config, err, &stats);
  out << "ingested " << data.size() << " of " << stats.files << " images (" << stats.filtered
      << " below colorness " << config.colorness_threshold << ", " << stats.unreadable
      << " unreadable)\n";
  Trainer trainer(config);
  if (!resume.empty()) {
    require_file(resume, "resume checkpoint");
    trainer.resume(load_checkpoint(resume));
    out << "resumed at step " << trainer.steps_done() << "\n";
  }
  TrainOptions opts;
  opts.checkpoint_path = fs::path(config.out_dir) / (name + ".ckpt");
  opts.log_path = fs::path(config.out_dir) / (name + "_loss.csv");
  opts.progress = &out;
  TrainSummary summary;
  if constexpr (std::is_same_v<Trainer, PixelCnnTrainer>) {
    summary = train_pixelcnn(trainer, data, opts);
  } else {
    summary = train_refinement(trainer, data, opts);
  }
  out << "wrote " << opts.checkpoint_path.string() << " and " << opts.log_path.string() << "\n";
  return kExitOk;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--seeds", "not a comma-separated seed list: " + text);
    }
  }
  if (seeds.empty()) throw CLI::ValidationError("--seeds", "empty seed list");
  return seeds;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pixcolor: autoregressive colorization with refinement", "pixcolor"};
  app.require_subcommand(1);

  ConfigOptions train_pix_cfg, train_ref_cfg, colorize_cfg;
  std::string resume_pix, resume_ref;

  auto* train_pix = app.add_subcommand("train-pixelcnn", "train conditioning + PixelCNN jointly");
  train_pix_cfg.attach(train_pix);
  train_pix->add_option("--resume", resume_pix, "checkpoint to continue from");

  auto* train_ref = app.add_subcommand("train-refine", "train the refinement network");
  train_ref_cfg.attach(train_ref);
  train_ref->add_option("--resume", resume_ref, "checkpoint to continue from");

  std::vector<std::string> colorize_inputs;
  std::string pixelcnn_ckpt, refine_ckpt, seeds_text = "1,2,3";
  auto* colorize_cmd = app.add_subcommand("colorize", "sample colorizations of grey or colour images");
  colorize_cmd->add_option("inputs", colorize_inputs, "PNG files or directories")->required();
  colorize_cfg.attach(colorize_cmd);
  colorize_cmd->add_option("--pixelcnn", pixelcnn_ckpt, "PixelCNN checkpoint (default <out-dir>/pixelcnn.ckpt)");
  colorize_cmd->add_option("--refine", refine_ckpt, "refinement checkpoint (default <out-dir>/refine.ckpt)");
  colorize_cmd->add_option("--seeds", seeds_text, "comma-separated sampling seeds")->capture_default_str();
  int colorize_threads = 0;
  colorize_cmd->add_option("--threads", colorize_threads, "worker threads (default PIXCOLOR_THREADS or all cores)");

  std::string hist_gen, hist_gt, hist_out = ".", hist_suffix;
  auto* hist_cmd = app.add_subcommand("eval-hist", "Lab a/b histograms and their intersection");
  hist_cmd->add_option("generated", hist_gen, "directory of generated PNGs")->required();
  hist_cmd->add_option("groundtruth", hist_gt, "directory of ground-truth PNGs")->required();
  hist_cmd->add_option("--suffix", hist_suffix, "only generated files whose stem ends with this");
  hist_cmd->add_option("--out-dir", hist_out, "output directory")->capture_default_str();
  int hist_bins = kLabBins;
  hist_cmd->add_option("--bins", hist_bins, "bins over [-110, 110]")->capture_default_str()->check(CLI::PositiveNumber);

  std::string div_dir, div_out = ".";
  int div_bins = kDiversityBins, div_threads = 0;
  auto* div_cmd = app.add_subcommand("eval-diversity", "pairwise MS-SSIM between samples of each image");
  div_cmd->add_option("samples", div_dir, "directory of <stem>_seed<k>.png files")->required();
  div_cmd->add_option("--out-dir", div_out, "output directory")->capture_default_str();
  div_cmd->add_option("--bins", div_bins, "histogram bins over [0, 1]")->capture_default_str()->check(CLI::PositiveNumber);
  div_cmd->add_option("--threads", div_threads, "worker threads (default PIXCOLOR_THREADS or all cores)");

  std::vector<std::string> demo_inputs;
  std::string demo_out = ".";
  int demo_size = 28;
  auto* demo_cmd = app.add_subcommand("bottleneck-demo", "recombine low-resolution chroma with full luminance");
  demo_cmd->add_option("inputs", demo_inputs, "PNG files or directories")->required();
  demo_cmd->add_option("--size", demo_size, "smaller side of the chroma image")->capture_default_str()->check(CLI::PositiveNumber);
  demo_cmd->add_option("--out-dir", demo_out, "output directory")->capture_default_str();

  std::string vtt_gen, vtt_gt, vtt_out = "vtt_manifest.jsonl", vtt_suffix;
  std::uint64_t vtt_seed = 1;
  auto* vtt_cmd = app.add_subcommand("export-vtt", "visual Turing test manifest (JSON lines)");
  vtt_cmd->add_option("generated", vtt_gen, "directory of generated PNGs")->required();
  vtt_cmd->add_option("groundtruth", vtt_gt, "directory of ground-truth PNGs")->required();
  vtt_cmd->add_option("--seed", vtt_seed, "seed for side assignment and order")->capture_default_str();
  vtt_cmd->add_option("--suffix", vtt_suffix, "generated stem = ground-truth stem + suffix");
  vtt_cmd->add_option("--out", vtt_out, "manifest path")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (colorize_cmd->parsed()) parse_seeds(seeds_text);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (train_pix->parsed()) {
      return run_train<PixelCnnTrainer>(train_pix_cfg.resolve(), resume_pix, "pixelcnn", out, err);
    }
    if (train_ref->parsed()) {
      return run_train<RefinementTrainer>(train_ref_cfg.resolve(), resume_ref, "refine", out, err);
    }
    if (colorize_cmd->parsed()) {
      TrainConfig config = colorize_cfg.resolve();
      const fs::path out_dir = config.out_dir;
      const fs::path pix_path = pixelcnn_ckpt.empty() ? out_dir / "pixelcnn.ckpt" : fs::path(pixelcnn_ckpt);
      const fs::path ref_path = refine_ckpt.empty() ? out_dir / "refine.ckpt" : fs::path(refine_ckpt);
      const auto files = expand_inputs(colorize_inputs);
      require_file(pix_path, "PixelCNN checkpoint");
      require_file(ref_path, "refinement checkpoint");
      const ModelCheckpoint pix_ckpt = load_checkpoint(pix_path);
      const auto model = load_chroma_model(pix_ckpt);
      const auto net = load_refinement_net(load_checkpoint(ref_path));
      ColorizeOptions opts;
      opts.seeds = parse_seeds(seeds_text);
      opts.temperature = config.temperature;
      opts.image_side = checkpoint_config(pix_ckpt).image_side;
      opts.threads = colorize_threads;
      fs::create_directories(out_dir);
      std::ostringstream ranking;
      ranking << "image,rank,seed,log_likelihood\n";
      for (const auto& file : files) {
        const RgbImage img = read_png(file);
        const auto results = colorize(*model, *net, img, opts);
        const std::string stem = file.stem().string();
        std::vector<const Colorization*> order;
        for (const auto& r : results) {
          write_png(out_dir / (stem + "_seed" + std::to_string(r.seed) + ".png"), r.refined);
          write_png(out_dir / (stem + "_unrefined_seed" + std::to_string(r.seed) + ".png"), r.unrefined);
          order.push_back(&r);
        }
        std::stable_sort(order.begin(), order.end(), [](const Colorization* a, const Colorization* b) {
          if (a->log_likelihood != b->log_likelihood) return a->log_likelihood > b->log_likelihood;
          return a->seed < b->seed;
        });
        for (std::size_t k = 0; k < order.size(); ++k) {
          char ll[64];
          std::snprintf(ll, sizeof ll, "%.9g", order[k]->log_likelihood);
          ranking << stem << ',' << k << ',' << order[k]->seed << ',' << ll << '\n';
        }
        out << "colorized " << file.string() << " (" << results.size() << " samples)\n";
      }
      write_text(out_dir / "likelihood_ranking.csv", ranking.str());
      return kExitOk;
    }
    if (hist_cmd->parsed()) {
      require_dir(hist_gen, "generated directory");
      require_dir(hist_gt, "ground-truth directory");
      const auto gen = read_images(pngs_with_suffix(hist_gen, hist_suffix));
      const auto gt = read_images(list_png_files(hist_gt));
      if (gen.empty()) throw RuntimeFailure("no generated images in " + hist_gen);
      if (gt.empty()) throw RuntimeFailure("no ground-truth images in " + hist_gt);
      fs::create_directories(hist_out);
      std::ostringstream hist_csv, inter_csv;
      hist_csv << "channel,set,bin_lo,bin_hi,mass\n";
      inter_csv << "channel,intersection\n";
      for (const auto channel : {LabChannel::A, LabChannel::B}) {
        const char* cname = channel == LabChannel::A ? "a" : "b";
        const Histogram hg = lab_channel_histogram(gen, channel, hist_bins);
        const Histogram ht = lab_channel_histogram(gt, channel, hist_bins);
        for (const auto& [set, h] : {std::pair{"generated", &hg}, std::pair{"groundtruth", &ht}}) {
          std::istringstream rows(histogram_csv(*h));
          std::string row;
          std::getline(rows, row);  // header
          while (std::getline(rows, row)) hist_csv << cname << ',' << set << ',' << row << '\n';
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", histogram_intersection(hg, ht));
        inter_csv << cname << ',' << buf << '\n';
        out << "intersection " << cname << " " << buf << "\n";
      }
      write_text(fs::path(hist_out) / "histograms.csv", hist_csv.str());
      write_text(fs::path(hist_out) / "histogram_intersection.csv", inter_csv.str());
      return kExitOk;
    }
    if (div_cmd->parsed()) {
      require_dir(div_dir, "samples directory");
      std::map<std::string, std::vector<std::pair<std::uint64_t, fs::path>>> groups;
      for (const auto& p : list_png_files(div_dir)) {
        const std::string stem = p.stem().string();
        const auto pos = stem.rfind("_seed");
        if (pos == std::string::npos || stem.find("_unrefined_seed") != std::string::npos) continue;
        const std::string tail = stem.substr(pos + 5);
        if (tail.empty() || !std::all_of(tail.begin(), tail.end(), ::isdigit)) continue;
        groups[stem.substr(0, pos)].push_back({std::stoull(tail), p});
      }
      if (groups.empty()) throw RuntimeFailure("no <stem>_seed<k>.png samples in " + div_dir);
      std::vector<SampleSet> sets;
      for (auto& [stem, entries] : groups) {
        std::sort(entries.begin(), entries.end());
        SampleSet s{stem, {}};
        for (const auto& e : entries) s.samples.push_back(read_png(e.second));
        sets.push_back(std::move(s));
      }
      const auto report = diversity_report(sets, div_bins, worker_threads(div_threads));
      fs::create_directories(div_out);
      write_text(fs::path(div_out) / "diversity.csv", diversity_csv(report));
      write_text(fs::path(div_out) / "diversity_pairs.csv", diversity_pairs_csv(report));
      write_text(fs::path(div_out) / "diversity_histogram.csv", histogram_csv(report.histogram));
      out << report.pair_count() << " pairs over " << report.images.size() << " images, "
          << report.identical_pair_count() << " identical\n";
      return kExitOk;
    }
    if (demo_cmd->parsed()) {
      const auto files = expand_inputs(demo_inputs);
      fs::create_directories(demo_out);
      std::ostringstream csv;
      csv << "image,psnr_bottleneck,psnr_grayscale\n";
      for (const auto& file : files) {
        const RgbImage img = read_png(file);
        if (std::min(img.width, img.height) < demo_size) {
          throw RuntimeFailure(file.string() + " is smaller than --size " + std::to_string(demo_size));
        }
        const auto [sw, sh] = small_side_extent(img.width, img.height, demo_size);
        const RgbImage small = area_resize_rgb(img, sw, sh);
        const RgbImage gray = grayscale_replication(img);
        const RgbImage bottleneck = chroma_bottleneck(img, demo_size);
        const std::string stem = file.stem().string();
        write_png(fs::path(demo_out) / (stem + "_chroma" + std::to_string(demo_size) + ".png"), small);
        write_png(fs::path(demo_out) / (stem + "_gray.png"), gray);
        write_png(fs::path(demo_out) / (stem + "_bottleneck.png"), bottleneck);
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.6f,%.6f", psnr(bottleneck, img), psnr(gray, img));
        csv << stem << ',' << buf << '\n';
      }
      write_text(fs::path(demo_out) / "bottleneck.csv", csv.str());
      out << "wrote " << files.size() << " triplets to " << demo_out << "\n";
      return kExitOk;
    }
    if (vtt_cmd->parsed()) {
      require_dir(vtt_gen, "generated directory");
      require_dir(vtt_gt, "ground-truth directory");
      const VttManifest manifest = export_vtt_manifest(vtt_gen, vtt_gt, vtt_seed, vtt_suffix, err);
      if (fs::path(vtt_out).has_parent_path()) fs::create_directories(fs::path(vtt_out).parent_path());
      // Relative to the manifest, so a moved or copied run still resolves.
      write_text(vtt_out, vtt_manifest_jsonl(manifest, fs::absolute(vtt_out).parent_path()));
      out << manifest.entries.size() << " pairs written to " << vtt_out << " ("
          << manifest.unmatched.size() << " unmatched)\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace pixcolor
