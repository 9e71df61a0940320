#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "eegdiff/diffusion/schedule.hpp"
#include "eegdiff/model/denoiser.hpp"

namespace eegdiff::model {

struct TrainOptions {
  int steps = 1'000'000;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int warmup_steps = 10'000;
  double delta = 0.01;  // condition augmentation during training
  int loss_p = 2;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::filesystem::path checkpoint_dir;
};

void to_json(nlohmann::json& j, const TrainOptions& o);
void from_json(const nlohmann::json& j, TrainOptions& o);

struct LossPoint {
  int step;
  double loss;
};

// Everything needed to continue training or to sample.
struct Checkpoint {
  Denoiser model;
  diffusion::ScheduleConfig schedule;
  TrainOptions options;
  int step = 0;
  // Adam state; empty until the first optimisation step.
  std::shared_ptr<torch::optim::Adam> optimizer;
};

// Writes model.pt, optimizer.pt and checkpoint.json into `dir`.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Optimises `checkpoint.model` on clean epochs (N, C, L) until
// checkpoint.step == options.steps. Step k draws its batch, noise levels and
// dropout masks from streams derived from (seed, k), so a resumed run
// continues exactly where the saved one stopped. Returns the per-step losses
// of this call.
std::vector<LossPoint> train_denoiser(Checkpoint& checkpoint, const torch::Tensor& epochs,
                                      const diffusion::NoiseSchedule& schedule,
                                      const std::function<void(const LossPoint&)>& on_step = {});

void write_loss_curve(const std::vector<LossPoint>& curve, const std::filesystem::path& csv,
                      bool append = false);

}  // namespace eegdiff::model
