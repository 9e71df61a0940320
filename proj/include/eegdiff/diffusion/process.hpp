#pragma once

#include <functional>

#include <torch/torch.h>

#include "eegdiff/core/rng.hpp"
#include "eegdiff/diffusion/schedule.hpp"

// Diffusion mathematics over epoch tensors. Epoch tensors have trailing shape
// (channels, timesteps); a leading batch axis is allowed everywhere.
namespace eegdiff::diffusion {

// f_theta(x_delta, y_t, gamma) -> predicted noise. Receives (B, C, L) batches
// and a (B) tensor of noise levels.
using NoisePredictor =
    std::function<torch::Tensor(const torch::Tensor& x_delta, const torch::Tensor& y_t,
                                const torch::Tensor& gamma)>;

// sqrt(gamma) * y0 + sqrt(1 - gamma) * epsilon.
torch::Tensor forward_marginal(const torch::Tensor& y0, double gamma, const torch::Tensor& epsilon);

// Per-item noise levels: `gamma` has one entry per leading batch element.
torch::Tensor forward_marginal(const torch::Tensor& y0, const torch::Tensor& gamma,
                               const torch::Tensor& epsilon);

struct Posterior {
  torch::Tensor mean;
  double variance;
};

// q(y_{t-1} | y0, y_t) for step t of `schedule`.
Posterior posterior_params(const torch::Tensor& y0, const torch::Tensor& yt, int t,
                           const NoiseSchedule& schedule);

// x + delta * z with explicit noise.
torch::Tensor augment_condition(const torch::Tensor& x, double delta, const torch::Tensor& z);
// x + delta * Z with Z ~ N(0, I) drawn from `rng`.
torch::Tensor augment_condition(const torch::Tensor& x, double delta, Rng& rng);

// (y_t - sqrt(1 - gamma) * eps_hat) / sqrt(gamma).
torch::Tensor estimate_y0(const torch::Tensor& yt, const torch::Tensor& eps_hat, double gamma_t);

// One training example of the denoising objective.
struct TrainingItem {
  torch::Tensor x_delta;
  torch::Tensor y_tilde;
  torch::Tensor gamma;  // (B)
  torch::Tensor epsilon;
};

// Builds a batch of training items from clean epochs `y0` (B, C, L) under
// self-pairing: the condition is the same epoch perturbed by `delta`.
TrainingItem make_training_batch(const torch::Tensor& y0, const NoiseSchedule& schedule,
                                 double delta, Rng& rng);

// Element mean of |f(x_delta, y_tilde, gamma) - epsilon|^p, p in {1, 2}.
// Keeps the autograd graph so it can be used for optimisation.
torch::Tensor training_loss(const NoisePredictor& denoiser, const TrainingItem& item, int p);

// One reverse step t -> t-1 with explicit noise `z` (ignored at t == 1).
torch::Tensor refinement_step(const NoisePredictor& denoiser, const torch::Tensor& x_delta,
                              const torch::Tensor& yt, int t, const NoiseSchedule& schedule,
                              const torch::Tensor& z);
torch::Tensor refinement_step(const NoisePredictor& denoiser, const torch::Tensor& x_delta,
                              const torch::Tensor& yt, int t, const NoiseSchedule& schedule,
                              Rng& rng);

// Reverse process for a single stream: y_T ~ N(0, I), condition augmented
// once, then `steps` refinement steps on the respaced schedule.
torch::Tensor generate(const NoisePredictor& denoiser, const torch::Tensor& x, double delta,
                       const NoiseSchedule& schedule, int steps, Rng& rng);

// Batched reverse process. Epoch i of `x` (B, C, L) draws all its noise from
// the stream mix_seed(global_seed, first_index + i), so the output does not
// depend on how epochs are grouped into batches.
torch::Tensor generate_batch(const NoisePredictor& denoiser, const torch::Tensor& x, double delta,
                             const NoiseSchedule& schedule, int steps, std::uint64_t global_seed,
                             std::uint64_t first_index);

}  // namespace eegdiff::diffusion
