#include "eegdiff/classify/networks.hpp"

#include <cmath>

#include "eegdiff/core/errors.hpp"

namespace eegdiff::classify {
namespace nn = torch::nn;

EEGNetImpl::EEGNetImpl(std::int64_t channels, std::int64_t samples, double sample_rate, EegNetParams p) {
  if (channels < 1 || samples < 32) throw ArgumentError("EEGNet needs >= 1 channel and >= 32 samples");
  if (p.f1 < 1 || p.depth_multiplier < 1 || p.f2 < 1) throw ArgumentError("EEGNet filter counts must be positive");
  if (!(p.dropout >= 0 && p.dropout < 1)) throw ArgumentError("EEGNet dropout must lie in [0, 1)");
  kernel_length_ = p.kernel_length > 0 ? p.kernel_length : static_cast<int>(std::lround(sample_rate / 2));
  if (kernel_length_ < 1) throw ArgumentError("EEGNet kernel length must be positive");
  const int d = p.f1 * p.depth_multiplier;
  features = register_module(
      "features",
      nn::Sequential(
          nn::Conv2d(nn::Conv2dOptions(1, p.f1, {1, kernel_length_}).padding(torch::kSame).bias(false)),
          nn::BatchNorm2d(p.f1),
          nn::Conv2d(nn::Conv2dOptions(p.f1, d, {channels, 1}).groups(p.f1).bias(false)),
          nn::BatchNorm2d(d), nn::ELU(), nn::AvgPool2d(nn::AvgPool2dOptions({1, 4})), nn::Dropout(p.dropout),
          nn::Conv2d(nn::Conv2dOptions(d, d, {1, 16}).padding(torch::kSame).groups(d).bias(false)),
          nn::Conv2d(nn::Conv2dOptions(d, p.f2, 1).bias(false)), nn::BatchNorm2d(p.f2), nn::ELU(),
          nn::AvgPool2d(nn::AvgPool2dOptions({1, 8})), nn::Dropout(p.dropout), nn::Flatten()));
  head = register_module("head", nn::Linear(p.f2 * (samples / 32), 2));
}

torch::Tensor EEGNetImpl::forward(const torch::Tensor& x) { return head(features->forward(x.unsqueeze(1))); }

TSceptionImpl::TSceptionImpl(std::int64_t channels, std::int64_t samples, double sample_rate, TsceptionParams p) {
  if (channels < 2 || channels % 2 != 0) throw ArgumentError("TSception needs an even channel count >= 2");
  if (p.num_t < 1 || p.num_s < 1 || p.hidden < 1 || p.pool < 1) throw ArgumentError("TSception sizes must be positive");
  if (!(p.dropout >= 0 && p.dropout < 1)) throw ArgumentError("TSception dropout must lie in [0, 1)");
  if (p.window_fractions.empty()) throw ArgumentError("TSception needs at least one temporal scale");

  std::int64_t time = 0;
  for (std::size_t k = 0; k < p.window_fractions.size(); ++k) {
    const int kernel = static_cast<int>(p.window_fractions[k] * sample_rate);
    if (kernel < 1 || kernel > samples) throw ArgumentError("TSception temporal kernel does not fit the epoch");
    temporal_kernels_.push_back(kernel);
    temporal.push_back(register_module(
        "temporal" + std::to_string(k),
        nn::Sequential(nn::Conv2d(nn::Conv2dOptions(1, p.num_t, {1, kernel})), nn::LeakyReLU(),
                       nn::AvgPool2d(nn::AvgPool2dOptions({1, p.pool}).stride({1, p.pool})))));
    time += (samples - kernel + 1) / p.pool;
  }
  const int spatial_pool = std::max(1, p.pool / 4);
  if (time / spatial_pool < 4) throw ArgumentError("epoch too short for TSception pooling");
  const auto half = channels / 2;
  spatial_whole = register_module(
      "spatial_whole", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(p.num_t, p.num_s, {channels, 1})), nn::LeakyReLU(),
                                      nn::AvgPool2d(nn::AvgPool2dOptions({1, spatial_pool}).stride({1, spatial_pool}))));
  spatial_half = register_module(
      "spatial_half",
      nn::Sequential(nn::Conv2d(nn::Conv2dOptions(p.num_t, p.num_s, {half, 1}).stride({half, 1})), nn::LeakyReLU(),
                     nn::AvgPool2d(nn::AvgPool2dOptions({1, spatial_pool}).stride({1, spatial_pool}))));
  fusion = register_module("fusion",
                           nn::Sequential(nn::Conv2d(nn::Conv2dOptions(p.num_s, p.num_s, {3, 1})), nn::LeakyReLU(),
                                          nn::AvgPool2d(nn::AvgPool2dOptions({1, 4}).stride({1, 4}))));
  bn_t = register_module("bn_t", nn::BatchNorm2d(p.num_t));
  bn_s = register_module("bn_s", nn::BatchNorm2d(p.num_s));
  bn_fusion = register_module("bn_fusion", nn::BatchNorm2d(p.num_s));
  head = register_module("head", nn::Sequential(nn::Linear(p.num_s, p.hidden), nn::ReLU(), nn::Dropout(p.dropout),
                                                nn::Linear(p.hidden, 2)));
}

torch::Tensor TSceptionImpl::forward(const torch::Tensor& x) {
  auto in = x.unsqueeze(1);
  std::vector<torch::Tensor> scales;
  for (auto& t : temporal) scales.push_back(t->forward(in));
  auto h = bn_t(torch::cat(scales, -1));
  h = bn_s(torch::cat({spatial_whole->forward(h), spatial_half->forward(h)}, 2));
  h = bn_fusion(fusion->forward(h));
  // Average over time, leaving (B, num_s).
  h = h.mean(-1).flatten(1);
  return head->forward(h);
}

}  // namespace eegdiff::classify
