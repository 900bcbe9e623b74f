#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include "pixcolor/checkpoint.hpp"
#include "pixcolor/config.hpp"
#include "pixcolor/dataset.hpp"
#include "pixcolor/pixelcnn.hpp"
#include "pixcolor/refinement.hpp"

namespace pixcolor {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Joint Adam optimisation of conditioning, adaptation and PixelCNN
/// parameters under the teacher-forced chroma NLL.
class PixelCnnTrainer {
 public:
  explicit PixelCnnTrainer(const TrainConfig& config);

  /// One optimisation step on the batch scheduled for the current step
  /// counter. Returns the batch NLL before the update.
  double step(const Dataset& data);

  std::int64_t steps_done() const { return adam_.step; }
  ChromaModel& model() { return *model_; }
  const TrainConfig& config() const { return config_; }

  ModelCheckpoint checkpoint();
  void resume(const ModelCheckpoint& ckpt);

 private:
  TrainConfig config_;
  std::unique_ptr<ChromaModel> model_;
  std::vector<Tensor> params_;
  AdamState adam_;
};

/// L1 training of the refinement network on ground-truth low-resolution
/// chroma. There is deliberately no entry point taking sampled grids.
class RefinementTrainer {
 public:
  explicit RefinementTrainer(const TrainConfig& config);

  double step(const Dataset& data);

  std::int64_t steps_done() const { return adam_.step; }
  RefinementNet& net() { return *net_; }
  const TrainConfig& config() const { return config_; }

  ModelCheckpoint checkpoint();
  void resume(const ModelCheckpoint& ckpt);

 private:
  TrainConfig config_;
  std::unique_ptr<RefinementNet> net_;
  std::vector<Tensor> params_;
  AdamState adam_;
};

struct TrainOptions {
  std::filesystem::path checkpoint_path;  // written every checkpoint_every steps and at the end
  std::filesystem::path log_path;         // CSV: step,loss_nats,wall_ms
  std::ostream* progress = nullptr;
  std::int64_t progress_every = 100;
};

struct TrainSummary {
  std::vector<double> losses;  // one per step run
};

/// Runs the trainer until `iterations` steps are done. A non-finite loss
/// writes `<checkpoint>.diverged` and throws TrainingDiverged.
TrainSummary train_pixelcnn(PixelCnnTrainer& trainer, const Dataset& data, const TrainOptions& opts);
TrainSummary train_refinement(RefinementTrainer& trainer, const Dataset& data,
                              const TrainOptions& opts);

/// Full-resolution chroma target [N,2,H,W] (Cr, Cb) of the given examples.
Tensor chroma_target(const std::vector<const Example*>& examples);

/// Rebuilds trained models from checkpoint files (architecture comes from
/// the stored config echo).
TrainConfig checkpoint_config(const ModelCheckpoint& ckpt);
std::unique_ptr<ChromaModel> load_chroma_model(const ModelCheckpoint& ckpt);
std::unique_ptr<RefinementNet> load_refinement_net(const ModelCheckpoint& ckpt);

/// Seeds for parameter initialisation, derived from the run seed.
std::uint64_t chroma_init_seed(const TrainConfig& config);
std::uint64_t refinement_init_seed(const TrainConfig& config);

}  // namespace pixcolor
