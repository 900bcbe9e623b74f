#include "pixcolor/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

namespace pixcolor {

namespace {

std::vector<const Example*> gather(const Dataset& data, const std::vector<std::size_t>& idx) {
  std::vector<const Example*> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&data[i]);
  return out;
}

Tensor gray_of(const std::vector<const Example*>& batch) {
  std::vector<const Plane*> planes;
  for (const Example* ex : batch) planes.push_back(&ex->gray());
  return gray_tensor(planes);
}

std::vector<const ChromaGrid*> grids_of(const std::vector<const Example*>& batch) {
  std::vector<const ChromaGrid*> grids;
  for (const Example* ex : batch) grids.push_back(&ex->grid);
  return grids;
}

template <class Trainer>
TrainSummary run_loop(Trainer& trainer, const Dataset& data, const TrainOptions& opts,
                      const char* what) {
  const TrainConfig& config = trainer.config();
  TrainSummary summary;
  std::ofstream log;
  if (!opts.log_path.empty()) {
    const bool append = trainer.steps_done() > 0 && std::filesystem::exists(opts.log_path);
    log.open(opts.log_path, append ? std::ios::app : std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write loss log " + opts.log_path.string());
    if (!append) log << "step,loss_nats,wall_ms\n";
  }
  const auto start = std::chrono::steady_clock::now();
  while (trainer.steps_done() < config.iterations) {
    const std::int64_t step = trainer.steps_done();
    const double loss = trainer.step(data);
    if (!std::isfinite(loss)) {
      if (!opts.checkpoint_path.empty()) {
        auto diag = opts.checkpoint_path;
        diag += ".diverged";
        save_checkpoint(diag, trainer.checkpoint());
      }
      throw TrainingDiverged(std::string(what) + " loss became non-finite at step " +
                             std::to_string(step));
    }
    summary.losses.push_back(loss);
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    if (log) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.9g", loss);
      log << step << ',' << buf << ',' << wall_ms << '\n';
    }
    if (opts.progress && (step % opts.progress_every == 0 || step + 1 == config.iterations)) {
      *opts.progress << what << " step " << step << " loss " << loss << " (" << wall_ms
                     << " ms)\n";
    }
    const std::int64_t done = trainer.steps_done();
    if (!opts.checkpoint_path.empty() && done % config.checkpoint_every == 0 &&
        done < config.iterations) {
      save_checkpoint(opts.checkpoint_path, trainer.checkpoint());
    }
  }
  if (!opts.checkpoint_path.empty()) save_checkpoint(opts.checkpoint_path, trainer.checkpoint());
  return summary;
}

}  // namespace

std::uint64_t chroma_init_seed(const TrainConfig& config) { return derive_seed(config.seed, 101); }
std::uint64_t refinement_init_seed(const TrainConfig& config) {
  return derive_seed(config.seed, 202);
}

PixelCnnTrainer::PixelCnnTrainer(const TrainConfig& config) : config_(config) {
  config_.validate();
  model_ = std::make_unique<ChromaModel>(config_.conditioning(), config_.pixelcnn(),
                                         chroma_init_seed(config_));
  params_ = model_->params.tensors();
  adam_.learning_rate = config_.learning_rate;
}

double PixelCnnTrainer::step(const Dataset& data) {
  const auto batch = gather(data, data.batch_indices(adam_.step, config_.batch_size, config_.seed));
  Tensor features = model_->conditioning.forward(gray_of(batch));
  features = gradient_multiplier(features, adam_.step, model_->conditioning.config());
  Tensor loss = pixelcnn_nll(*model_, grids_of(batch), features);
  const double value = loss.item();
  if (!std::isfinite(value)) return value;
  model_->params.zero_grad();
  loss.backward();
  adam_step(params_, adam_);
  return value;
}

ModelCheckpoint PixelCnnTrainer::checkpoint() {
  return snapshot_checkpoint(model_->params, &adam_, config_echo(config_));
}

void PixelCnnTrainer::resume(const ModelCheckpoint& ckpt) {
  restore_checkpoint(ckpt, model_->params, &adam_);
  adam_.learning_rate = config_.learning_rate;
}

RefinementTrainer::RefinementTrainer(const TrainConfig& config) : config_(config) {
  config_.validate();
  net_ = std::make_unique<RefinementNet>(config_.refinement(), refinement_init_seed(config_));
  params_ = net_->params().tensors();
  adam_.learning_rate = config_.learning_rate;
}

Tensor chroma_target(const std::vector<const Example*>& examples) {
  const int w = examples.at(0)->ycc.width(), h = examples.at(0)->ycc.height();
  std::vector<double> values;
  values.reserve(examples.size() * 2 * w * h);
  for (const Example* ex : examples) {
    values.insert(values.end(), ex->ycc.cr.values.begin(), ex->ycc.cr.values.end());
    values.insert(values.end(), ex->ycc.cb.values.begin(), ex->ycc.cb.values.end());
  }
  return Tensor::from_values(
      {examples.size(), 2, static_cast<std::size_t>(h), static_cast<std::size_t>(w)},
      std::move(values));
}

double RefinementTrainer::step(const Dataset& data) {
  const auto batch = gather(data, data.batch_indices(adam_.step, config_.batch_size, config_.seed));
  const int side = batch.front()->ycc.width();
  Tensor hint = upsample_hint(grids_of(batch), side, batch.front()->ycc.height());
  Tensor pred = net_->forward(gray_of(batch), hint);
  Tensor loss = l1_loss(pred, chroma_target(batch));
  const double value = loss.item();
  if (!std::isfinite(value)) return value;
  net_->params().zero_grad();
  loss.backward();
  adam_step(params_, adam_);
  return value;
}

ModelCheckpoint RefinementTrainer::checkpoint() {
  return snapshot_checkpoint(net_->params(), &adam_, config_echo(config_));
}

void RefinementTrainer::resume(const ModelCheckpoint& ckpt) {
  restore_checkpoint(ckpt, net_->params(), &adam_);
  adam_.learning_rate = config_.learning_rate;
}

TrainSummary train_pixelcnn(PixelCnnTrainer& trainer, const Dataset& data, const TrainOptions& opts) {
  return run_loop(trainer, data, opts, "pixelcnn");
}

TrainSummary train_refinement(RefinementTrainer& trainer, const Dataset& data,
                              const TrainOptions& opts) {
  return run_loop(trainer, data, opts, "refinement");
}

TrainConfig checkpoint_config(const ModelCheckpoint& ckpt) {
  TrainConfig config;
  apply_config_text(config, ckpt.config);
  return config;
}

std::unique_ptr<ChromaModel> load_chroma_model(const ModelCheckpoint& ckpt) {
  const TrainConfig config = checkpoint_config(ckpt);
  auto model = std::make_unique<ChromaModel>(config.conditioning(), config.pixelcnn(),
                                             chroma_init_seed(config));
  restore_checkpoint(ckpt, model->params, nullptr);
  return model;
}

std::unique_ptr<RefinementNet> load_refinement_net(const ModelCheckpoint& ckpt) {
  const TrainConfig config = checkpoint_config(ckpt);
  auto net = std::make_unique<RefinementNet>(config.refinement(), refinement_init_seed(config));
  restore_checkpoint(ckpt, net->params(), nullptr);
  return net;
}

}  // namespace pixcolor
