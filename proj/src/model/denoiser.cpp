#include "eegdiff/model/denoiser.hpp"

#include <cmath>
#include <numeric>

#include "eegdiff/core/errors.hpp"

namespace eegdiff::model {
namespace nn = torch::nn;

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;
constexpr double kMaxEmbedFrequency = 1000.0;

int norm_groups(int width) { return std::gcd(width, 8); }

nn::Conv2d conv3x3(int in, int out, int stride = 1) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

// Frequencies run geometrically from kMaxEmbedFrequency down to exactly 1, so
// the lowest one stays monotone over sqrt(gamma) in (0, 1].
std::vector<double> embed_frequencies(int half) {
  std::vector<double> freqs(static_cast<std::size_t>(half));
  for (int k = 0; k < half; ++k) {
    const double frac = half == 1 ? 1.0 : static_cast<double>(k) / (half - 1);
    freqs[static_cast<std::size_t>(k)] = std::pow(kMaxEmbedFrequency, 1.0 - frac);
  }
  return freqs;
}

}  // namespace

void DenoiserConfig::validate() const {
  if (depth < 1) throw ArgumentError("denoiser depth must be >= 1");
  if (static_cast<int>(channel_multipliers.size()) != depth) {
    throw ArgumentError("channel_multipliers must have one entry per stage");
  }
  if (base_width < 1 || blocks_per_stage < 1) {
    throw ArgumentError("base_width and blocks_per_stage must be positive");
  }
  for (int m : channel_multipliers) {
    if (m < 1) throw ArgumentError("channel multipliers must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("dropout must lie in [0, 1)");
  if (gamma_embed_dim < 2 || gamma_embed_dim % 2 != 0) {
    throw ArgumentError("gamma_embed_dim must be even and >= 2");
  }
}

void to_json(nlohmann::json& j, const DenoiserConfig& c) {
  j = nlohmann::json{{"base_width", c.base_width},
                     {"depth", c.depth},
                     {"channel_multipliers", c.channel_multipliers},
                     {"blocks_per_stage", c.blocks_per_stage},
                     {"attention_resolution", c.attention_resolution},
                     {"dropout", c.dropout},
                     {"gamma_embed_dim", c.gamma_embed_dim}};
}

void from_json(const nlohmann::json& j, DenoiserConfig& c) {
  DenoiserConfig d;
  c.base_width = j.value("base_width", d.base_width);
  c.depth = j.value("depth", d.depth);
  c.channel_multipliers = j.value("channel_multipliers", d.channel_multipliers);
  c.blocks_per_stage = j.value("blocks_per_stage", d.blocks_per_stage);
  c.attention_resolution = j.value("attention_resolution", d.attention_resolution);
  c.dropout = j.value("dropout", d.dropout);
  c.gamma_embed_dim = j.value("gamma_embed_dim", d.gamma_embed_dim);
}

std::vector<double> gamma_embedding(double gamma, int dim) {
  if (dim < 2 || dim % 2 != 0) throw ArgumentError("embedding dimension must be even");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ArgumentError("gamma must lie in (0, 1]");
  const int half = dim / 2;
  const auto freqs = embed_frequencies(half);
  const double level = std::sqrt(gamma);
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (int k = 0; k < half; ++k) {
    const double arg = level * freqs[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(k)] = std::sin(arg);
    out[static_cast<std::size_t>(k + half)] = std::cos(arg);
  }
  return out;
}

torch::Tensor gamma_embedding(const torch::Tensor& gamma, int dim) {
  if (dim < 2 || dim % 2 != 0) throw ArgumentError("embedding dimension must be even");
  const auto freqs = torch::tensor(embed_frequencies(dim / 2),
                                   torch::TensorOptions().dtype(torch::kDouble))
                         .to(gamma.dtype());
  auto args = torch::sqrt(gamma).unsqueeze(1) * freqs.unsqueeze(0);
  return torch::cat({torch::sin(args), torch::cos(args)}, 1);
}

torch::Tensor merge_skip(const torch::Tensor& h, const torch::Tensor& skip) {
  if (h.sizes() != skip.sizes()) throw ArgumentError("skip merge shape mismatch");
  return (h + skip) * kSqrtHalf;
}

ResBlockImpl::ResBlockImpl(int in_width, int out_width, int embed_width, double dropout)
    : norm1(nn::GroupNormOptions(norm_groups(in_width), in_width)),
      norm2(nn::GroupNormOptions(norm_groups(out_width), out_width)),
      conv1(conv3x3(in_width, out_width)),
      conv2(conv3x3(out_width, out_width)),
      film(embed_width, 2 * out_width),
      drop(dropout) {
  register_module("norm1", norm1);
  register_module("norm2", norm2);
  register_module("conv1", conv1);
  register_module("conv2", conv2);
  register_module("film", film);
  register_module("drop", drop);
  if (in_width != out_width) {
    shortcut = register_module("shortcut", nn::Conv2d(nn::Conv2dOptions(in_width, out_width, 1)));
  }
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& embedding) {
  auto h = conv1(torch::silu(norm1(x)));
  auto affine = film(torch::silu(embedding)).unsqueeze(-1).unsqueeze(-1);
  auto scale_shift = affine.chunk(2, 1);
  h = norm2(h) * (1 + scale_shift[0]) + scale_shift[1];
  h = conv2(drop(torch::silu(h)));
  return h + (shortcut ? shortcut(x) : x);
}

AttentionBlockImpl::AttentionBlockImpl(int width)
    : norm(nn::GroupNormOptions(norm_groups(width), width)),
      qkv(nn::Conv2dOptions(width, 3 * width, 1)),
      proj(nn::Conv2dOptions(width, width, 1)) {
  register_module("norm", norm);
  register_module("qkv", qkv);
  register_module("proj", proj);
}

torch::Tensor AttentionBlockImpl::forward(const torch::Tensor& x) {
  const auto b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  auto parts = qkv(norm(x)).reshape({b, 3, c, h * w}).unbind(1);
  auto scores = torch::bmm(parts[0].transpose(1, 2), parts[1]) / std::sqrt(static_cast<double>(c));
  auto weights = torch::softmax(scores, -1);                    // (b, hw, hw)
  auto attended = torch::bmm(parts[2], weights.transpose(1, 2));  // (b, c, hw)
  return x + proj(attended.reshape({b, c, h, w}));
}

UNetImpl::UNetImpl(DenoiserConfig config, GridShape grid) : config_(std::move(config)), grid_(grid) {
  config_.validate();
  const std::int64_t factor = std::int64_t{1} << (config_.depth - 1);
  if (grid_.rows < 1 || grid_.cols < 1 || grid_.rows % factor != 0 || grid_.cols % factor != 0) {
    throw ArgumentError("epoch grid " + std::to_string(grid_.rows) + "x" +
                        std::to_string(grid_.cols) + " is not divisible by 2^(depth-1) = " +
                        std::to_string(factor));
  }
  for (int s = 0; s < config_.depth; ++s) {
    GridShape g{grid_.rows >> s, grid_.cols >> s};
    stage_grids_.push_back(g);
    if (std::max(g.rows, g.cols) <= config_.attention_resolution) attention_stages_.push_back(s);
  }
  auto has_attention = [&](int s) {
    return std::find(attention_stages_.begin(), attention_stages_.end(), s) !=
           attention_stages_.end();
  };

  const int embed_width = 4 * config_.base_width;
  embed_mlp = register_module("embed_mlp", nn::Sequential(nn::Linear(config_.gamma_embed_dim, embed_width),
                                                          nn::SiLU(), nn::Linear(embed_width, embed_width)));
  std::vector<int> widths;
  for (int m : config_.channel_multipliers) widths.push_back(config_.base_width * m);

  conv_in = register_module("conv_in", conv3x3(2, widths[0]));
  int width = widths[0];
  for (int s = 0; s < config_.depth; ++s) {
    Stage stage;
    for (int b = 0; b < config_.blocks_per_stage; ++b) {
      const auto tag = "down" + std::to_string(s) + "_" + std::to_string(b);
      stage.blocks.push_back(
          register_module(tag, ResBlock(width, widths[s], embed_width, config_.dropout)));
      width = widths[s];
      if (has_attention(s)) stage.attention.push_back(register_module(tag + "_attn", AttentionBlock(width)));
    }
    down_.push_back(std::move(stage));
    if (s + 1 < config_.depth) {
      downsample_.push_back(register_module("downsample" + std::to_string(s), conv3x3(width, width, 2)));
    }
  }

  mid1_ = register_module("mid1", ResBlock(width, width, embed_width, config_.dropout));
  if (has_attention(config_.depth - 1)) mid_attention_ = register_module("mid_attn", AttentionBlock(width));
  mid2_ = register_module("mid2", ResBlock(width, width, embed_width, config_.dropout));

  up_.resize(static_cast<std::size_t>(config_.depth));
  upsample_.resize(static_cast<std::size_t>(config_.depth), torch::nn::Conv2d(nullptr));
  for (int s = config_.depth - 1; s >= 0; --s) {
    Stage& stage = up_[static_cast<std::size_t>(s)];
    for (int b = 0; b < config_.blocks_per_stage; ++b) {
      const auto tag = "up" + std::to_string(s) + "_" + std::to_string(b);
      stage.blocks.push_back(
          register_module(tag, ResBlock(widths[s], widths[s], embed_width, config_.dropout)));
      if (has_attention(s)) stage.attention.push_back(register_module(tag + "_attn", AttentionBlock(widths[s])));
    }
    if (s > 0) {
      upsample_[static_cast<std::size_t>(s)] =
          register_module("upsample" + std::to_string(s), conv3x3(widths[s], widths[s - 1]));
    }
  }

  norm_out = register_module("norm_out", nn::GroupNorm(nn::GroupNormOptions(norm_groups(widths[0]), widths[0])));
  conv_out = register_module("conv_out", conv3x3(widths[0], 1));
}

torch::Tensor UNetImpl::forward(const torch::Tensor& x_delta, const torch::Tensor& y_t,
                                const torch::Tensor& gamma) {
  if (x_delta.dim() != 3 || x_delta.sizes() != y_t.sizes()) {
    throw ArgumentError("denoiser expects matching (B, rows, cols) condition and target");
  }
  if (x_delta.size(1) != grid_.rows || x_delta.size(2) != grid_.cols) {
    throw ArgumentError("epoch grid does not match the denoiser's input contract");
  }
  if (gamma.dim() != 1 || gamma.size(0) != x_delta.size(0)) {
    throw ArgumentError("denoiser expects one gamma per batch item");
  }
  auto emb = embed_mlp->forward(gamma_embedding(gamma.to(x_delta.dtype()), config_.gamma_embed_dim));

  auto h = conv_in(torch::stack({x_delta, y_t}, 1));
  std::vector<torch::Tensor> skips;
  for (int s = 0; s < config_.depth; ++s) {
    Stage& stage = down_[static_cast<std::size_t>(s)];
    for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
      h = stage.blocks[b]->forward(h, emb);
      if (!stage.attention.empty()) h = stage.attention[b]->forward(h);
      skips.push_back(h);
    }
    if (s + 1 < config_.depth) h = downsample_[static_cast<std::size_t>(s)]->forward(h);
  }

  h = mid1_->forward(h, emb);
  if (mid_attention_) h = mid_attention_->forward(h);
  h = mid2_->forward(h, emb);

  for (int s = config_.depth - 1; s >= 0; --s) {
    Stage& stage = up_[static_cast<std::size_t>(s)];
    for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
      h = merge_skip(h, skips.back());
      skips.pop_back();
      h = stage.blocks[b]->forward(h, emb);
      if (!stage.attention.empty()) h = stage.attention[b]->forward(h);
    }
    if (s > 0) {
      const auto& next = stage_grids_[static_cast<std::size_t>(s - 1)];
      h = torch::nn::functional::interpolate(
          h, torch::nn::functional::InterpolateFuncOptions()
                 .size(std::vector<std::int64_t>{next.rows, next.cols})
                 .mode(torch::kNearest));
      h = upsample_[static_cast<std::size_t>(s)]->forward(h);
    }
  }
  return conv_out(torch::silu(norm_out(h))).squeeze(1);
}

std::int64_t UNetImpl::parameter_count() const {
  std::int64_t total = 0;
  for (const auto& p : parameters()) total += p.numel();
  return total;
}

diffusion::NoisePredictor Denoiser::predictor() const {
  UNet handle = net;
  return [handle](const torch::Tensor& x, const torch::Tensor& y, const torch::Tensor& g) mutable {
    return handle->forward(x, y, g);
  };
}

Denoiser build_denoiser(const DenoiserConfig& config, GridShape grid) {
  return Denoiser{UNet(config, grid)};
}

torch::Tensor denoise_forward(const Denoiser& model, const torch::Tensor& x_delta,
                              const torch::Tensor& y_t, double gamma) {
  const bool single = y_t.dim() == 2;
  auto x = single ? x_delta.unsqueeze(0) : x_delta;
  auto y = single ? y_t.unsqueeze(0) : y_t;
  torch::NoGradGuard no_grad;
  auto g = torch::full({y.size(0)}, gamma, y.options());
  UNet net = model.net;
  auto out = net->forward(x, y, g);
  if (!torch::isfinite(out).all().item<bool>()) throw RunError("denoiser produced non-finite output");
  return single ? out.squeeze(0) : out;
}

}  // namespace eegdiff::model
