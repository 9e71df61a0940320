#pragma once

#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "eegdiff/diffusion/process.hpp"

namespace eegdiff::model {

struct DenoiserConfig {
  int base_width = 32;
  int depth = 4;
  std::vector<int> channel_multipliers{1, 2, 4, 8};
  int blocks_per_stage = 2;
  // Self-attention runs at every stage whose larger grid axis is at most this.
  int attention_resolution = 16;
  double dropout = 0.2;
  int gamma_embed_dim = 64;

  // Throws ArgumentError when the config cannot describe a network.
  void validate() const;
};

void to_json(nlohmann::json& j, const DenoiserConfig& c);
void from_json(const nlohmann::json& j, DenoiserConfig& c);

struct GridShape {
  std::int64_t rows;  // EEG channels
  std::int64_t cols;  // timesteps
  bool operator==(const GridShape&) const = default;
};

// Sinusoidal features of sqrt(gamma): dim/2 sines then dim/2 cosines at
// geometrically spaced frequencies.
std::vector<double> gamma_embedding(double gamma, int dim);
// Batched variant returning (B, dim) in gamma's dtype.
torch::Tensor gamma_embedding(const torch::Tensor& gamma, int dim);

// (h + skip) / sqrt(2): the U-Net's skip merge.
torch::Tensor merge_skip(const torch::Tensor& h, const torch::Tensor& skip);

// Residual block: GroupNorm -> SiLU -> conv, noise-level FiLM, GroupNorm ->
// SiLU -> dropout -> conv, with a learned 1x1 shortcut on width change.
struct ResBlockImpl : torch::nn::Module {
  ResBlockImpl(int in_width, int out_width, int embed_width, double dropout);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& embedding);

  torch::nn::GroupNorm norm1{nullptr}, norm2{nullptr};
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::Linear film{nullptr};
  torch::nn::Dropout drop{nullptr};
  torch::nn::Conv2d shortcut{nullptr};
};
TORCH_MODULE(ResBlock);

// Single-head self-attention over all grid positions, residual.
struct AttentionBlockImpl : torch::nn::Module {
  explicit AttentionBlockImpl(int width);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::GroupNorm norm{nullptr};
  torch::nn::Conv2d qkv{nullptr}, proj{nullptr};
};
TORCH_MODULE(AttentionBlock);

// Conditional noise predictor over (2 planes x rows x cols) inputs: the
// perturbed condition and the noisy target stacked as feature planes.
class UNetImpl : public torch::nn::Module {
 public:
  UNetImpl(DenoiserConfig config, GridShape grid);

  // x_delta, y_t: (B, rows, cols); gamma: (B). Returns (B, rows, cols).
  torch::Tensor forward(const torch::Tensor& x_delta, const torch::Tensor& y_t,
                        const torch::Tensor& gamma);

  const DenoiserConfig& config() const { return config_; }
  GridShape grid() const { return grid_; }

  // Per-stage grid sizes from the input grid down to the bottleneck.
  const std::vector<GridShape>& stage_grids() const { return stage_grids_; }
  // Stages (0-based) that carry self-attention; the bottleneck index equals
  // depth - 1 and also covers the middle block.
  const std::vector<int>& attention_stages() const { return attention_stages_; }
  std::int64_t parameter_count() const;

 private:
  struct Stage {
    std::vector<ResBlock> blocks;
    std::vector<AttentionBlock> attention;
  };

  DenoiserConfig config_;
  GridShape grid_;
  std::vector<GridShape> stage_grids_;
  std::vector<int> attention_stages_;

  torch::nn::Sequential embed_mlp{nullptr};
  torch::nn::Conv2d conv_in{nullptr};
  std::vector<Stage> down_;
  std::vector<torch::nn::Conv2d> downsample_;
  ResBlock mid1_{nullptr}, mid2_{nullptr};
  AttentionBlock mid_attention_{nullptr};
  std::vector<Stage> up_;
  std::vector<torch::nn::Conv2d> upsample_;
  torch::nn::GroupNorm norm_out{nullptr};
  torch::nn::Conv2d conv_out{nullptr};
};
TORCH_MODULE(UNet);

// Trained or freshly initialised noise predictor.
struct Denoiser {
  UNet net{nullptr};

  DenoiserConfig config() const { return net->config(); }
  GridShape grid() const { return net->grid(); }
  // Adapter for the diffusion routines; runs under the module's current mode.
  diffusion::NoisePredictor predictor() const;
};

Denoiser build_denoiser(const DenoiserConfig& config, GridShape grid);

// Shape-checked inference-style forward pass returning finite noise estimates.
torch::Tensor denoise_forward(const Denoiser& model, const torch::Tensor& x_delta,
                              const torch::Tensor& y_t, double gamma);

}  // namespace eegdiff::model
