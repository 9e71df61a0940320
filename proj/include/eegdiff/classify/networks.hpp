#pragma once

#include <vector>

#include <torch/torch.h>

namespace eegdiff::classify {

struct EegNetParams {
  int f1 = 8;
  int depth_multiplier = 2;
  int f2 = 16;
  int kernel_length = 0;  // 0 = half the sample rate
  double dropout = 0.5;
};

// Compact CNN: temporal conv, depthwise spatial conv, separable conv, linear
// head. Input (B, channels, samples); output (B, 2) class scores.
struct EEGNetImpl : torch::nn::Module {
  EEGNetImpl(std::int64_t channels, std::int64_t samples, double sample_rate, EegNetParams params = {});
  torch::Tensor forward(const torch::Tensor& x);

  int kernel_length() const { return kernel_length_; }

  torch::nn::Sequential features{nullptr};
  torch::nn::Linear head{nullptr};

 private:
  int kernel_length_;
};
TORCH_MODULE(EEGNet);

struct TsceptionParams {
  int num_t = 15;  // filters per temporal scale
  int num_s = 15;  // spatial filters
  int hidden = 32;
  double dropout = 0.5;
  // Temporal kernels as fractions of the sample rate.
  std::vector<double> window_fractions{0.5, 0.25, 0.125};
  int pool = 8;
};

// Multi-scale temporal convolutions, a whole-montage spatial kernel plus a
// half-montage kernel applied to each half in turn, a fusion layer over the
// three spatial rows and an MLP head. Channels are expected in
// left-then-right hemisphere order. Output (B, 2).
struct TSceptionImpl : torch::nn::Module {
  TSceptionImpl(std::int64_t channels, std::int64_t samples, double sample_rate, TsceptionParams params = {});
  torch::Tensor forward(const torch::Tensor& x);

  const std::vector<int>& temporal_kernels() const { return temporal_kernels_; }

  std::vector<torch::nn::Sequential> temporal;
  torch::nn::Sequential spatial_whole{nullptr}, spatial_half{nullptr}, fusion{nullptr};
  torch::nn::BatchNorm2d bn_t{nullptr}, bn_s{nullptr}, bn_fusion{nullptr};
  torch::nn::Sequential head{nullptr};

 private:
  std::vector<int> temporal_kernels_;
};
TORCH_MODULE(TSception);

}  // namespace eegdiff::classify
