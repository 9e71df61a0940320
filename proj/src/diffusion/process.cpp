#include "eegdiff/diffusion/process.hpp"

#include <cmath>
#include <vector>

#include "eegdiff/core/errors.hpp"

namespace eegdiff::diffusion {
namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) throw ArgumentError(std::string("shape mismatch in ") + what);
}

void require_finite(const torch::Tensor& t, const char* what) {
  if (!torch::isfinite(t).all().item<bool>()) {
    throw RunError(std::string("non-finite values from ") + what);
  }
}

// Reshapes a (B) tensor so it broadcasts against (B, ...) epochs.
torch::Tensor per_item(const torch::Tensor& values, const torch::Tensor& like) {
  std::vector<std::int64_t> shape(static_cast<std::size_t>(like.dim()), 1);
  shape[0] = like.size(0);
  return values.to(like.dtype()).reshape(shape);
}

// Calls the predictor on a batch, lifting single (C, L) epochs to (1, C, L).
torch::Tensor predict(const NoisePredictor& denoiser, const torch::Tensor& x_delta,
                      const torch::Tensor& yt, double gamma) {
  const bool single = yt.dim() == 2;
  auto xb = single ? x_delta.unsqueeze(0) : x_delta;
  auto yb = single ? yt.unsqueeze(0) : yt;
  auto g = torch::full({yb.size(0)}, gamma, yb.options());
  auto out = denoiser(xb, yb, g);
  if (out.sizes() != yb.sizes()) throw RunError("denoiser output shape differs from its input");
  require_finite(out, "denoiser");
  return single ? out.squeeze(0) : out;
}

}  // namespace

torch::Tensor forward_marginal(const torch::Tensor& y0, double gamma, const torch::Tensor& epsilon) {
  require_same_shape(y0, epsilon, "forward_marginal");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ArgumentError("gamma must lie in [0, 1]");
  return std::sqrt(gamma) * y0 + std::sqrt(1.0 - gamma) * epsilon;
}

torch::Tensor forward_marginal(const torch::Tensor& y0, const torch::Tensor& gamma,
                               const torch::Tensor& epsilon) {
  require_same_shape(y0, epsilon, "forward_marginal");
  if (gamma.dim() != 1 || y0.dim() < 1 || gamma.size(0) != y0.size(0)) {
    throw ArgumentError("forward_marginal expects one gamma per batch item");
  }
  if ((gamma < 0).any().item<bool>() || (gamma > 1).any().item<bool>()) {
    throw ArgumentError("gamma must lie in [0, 1]");
  }
  auto g = per_item(gamma, y0);
  return torch::sqrt(g) * y0 + torch::sqrt(1.0 - g) * epsilon;
}

Posterior posterior_params(const torch::Tensor& y0, const torch::Tensor& yt, int t,
                           const NoiseSchedule& schedule) {
  require_same_shape(y0, yt, "posterior_params");
  const double alpha = schedule.alpha(t);
  const double gamma = schedule.gamma(t);
  const double gamma_prev = schedule.gamma(t - 1);
  const double denom = 1.0 - gamma;
  if (denom == 0.0) throw ArgumentError("degenerate schedule: 1 - gamma_t == 0");
  const double c0 = std::sqrt(gamma_prev) * (1.0 - alpha) / denom;
  const double ct = std::sqrt(alpha) * (1.0 - gamma_prev) / denom;
  return {c0 * y0 + ct * yt, (1.0 - gamma_prev) * (1.0 - alpha) / denom};
}

torch::Tensor augment_condition(const torch::Tensor& x, double delta, const torch::Tensor& z) {
  if (!(delta >= 0.0)) throw ArgumentError("delta must be non-negative");
  require_same_shape(x, z, "augment_condition");
  if (delta == 0.0) return x.clone();
  return x + delta * z;
}

torch::Tensor augment_condition(const torch::Tensor& x, double delta, Rng& rng) {
  if (!(delta >= 0.0)) throw ArgumentError("delta must be non-negative");
  return augment_condition(x, delta, rng.normal(x.sizes(), x.scalar_type()));
}

torch::Tensor estimate_y0(const torch::Tensor& yt, const torch::Tensor& eps_hat, double gamma_t) {
  require_same_shape(yt, eps_hat, "estimate_y0");
  if (!(gamma_t > 0.0 && gamma_t <= 1.0)) throw ArgumentError("gamma_t must lie in (0, 1]");
  return (yt - std::sqrt(1.0 - gamma_t) * eps_hat) / std::sqrt(gamma_t);
}

TrainingItem make_training_batch(const torch::Tensor& y0, const NoiseSchedule& schedule,
                                 double delta, Rng& rng) {
  if (y0.dim() != 3) throw ArgumentError("training batch must be (B, C, L)");
  const auto batch = y0.size(0);
  std::vector<double> gammas;
  gammas.reserve(static_cast<std::size_t>(batch));
  for (std::int64_t i = 0; i < batch; ++i) gammas.push_back(sample_gamma(schedule, rng).gamma);
  auto gamma = torch::tensor(gammas, torch::TensorOptions().dtype(torch::kDouble)).to(y0.dtype());
  auto epsilon = rng.normal(y0.sizes(), y0.scalar_type());
  auto x_delta = augment_condition(y0, delta, rng);
  auto y_tilde = forward_marginal(y0, gamma, epsilon);
  return {x_delta, y_tilde, gamma, epsilon};
}

torch::Tensor training_loss(const NoisePredictor& denoiser, const TrainingItem& item, int p) {
  if (p != 1 && p != 2) throw ArgumentError("loss norm p must be 1 or 2");
  auto predicted = denoiser(item.x_delta, item.y_tilde, item.gamma);
  if (predicted.sizes() != item.epsilon.sizes()) {
    throw RunError("denoiser output shape differs from the noise target");
  }
  require_finite(predicted.detach(), "denoiser");
  auto residual = predicted - item.epsilon;
  return p == 2 ? residual.pow(2).mean() : residual.abs().mean();
}

torch::Tensor refinement_step(const NoisePredictor& denoiser, const torch::Tensor& x_delta,
                              const torch::Tensor& yt, int t, const NoiseSchedule& schedule,
                              const torch::Tensor& z) {
  require_same_shape(x_delta, yt, "refinement_step");
  const double alpha = schedule.alpha(t);
  const double gamma = schedule.gamma(t);
  auto eps_hat = predict(denoiser, x_delta, yt, gamma);
  auto mean = (yt - ((1.0 - alpha) / std::sqrt(1.0 - gamma)) * eps_hat) / std::sqrt(alpha);
  if (t == 1) return mean;
  require_same_shape(yt, z, "refinement_step noise");
  return mean + std::sqrt(1.0 - alpha) * z;
}

torch::Tensor refinement_step(const NoisePredictor& denoiser, const torch::Tensor& x_delta,
                              const torch::Tensor& yt, int t, const NoiseSchedule& schedule,
                              Rng& rng) {
  if (t == 1) return refinement_step(denoiser, x_delta, yt, t, schedule, torch::Tensor());
  auto z = rng.normal(yt.sizes(), yt.scalar_type());
  return refinement_step(denoiser, x_delta, yt, t, schedule, z);
}

torch::Tensor generate(const NoisePredictor& denoiser, const torch::Tensor& x, double delta,
                       const NoiseSchedule& schedule, int steps, Rng& rng) {
  if (steps < 1) throw ArgumentError("generation needs at least one step");
  torch::NoGradGuard no_grad;
  const auto grid = respace(schedule, steps);
  auto x_delta = augment_condition(x, delta, rng);
  auto y = rng.normal(x.sizes(), x.scalar_type());
  for (int t = grid.steps(); t >= 1; --t) y = refinement_step(denoiser, x_delta, y, t, grid, rng);
  return y;
}

torch::Tensor generate_batch(const NoisePredictor& denoiser, const torch::Tensor& x, double delta,
                             const NoiseSchedule& schedule, int steps, std::uint64_t global_seed,
                             std::uint64_t first_index) {
  if (steps < 1) throw ArgumentError("generation needs at least one step");
  if (x.dim() != 3) throw ArgumentError("batched generation expects (B, C, L)");
  if (!(delta >= 0.0)) throw ArgumentError("delta must be non-negative");
  torch::NoGradGuard no_grad;
  const auto grid = respace(schedule, steps);
  const auto batch = x.size(0);
  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(batch));
  for (std::int64_t i = 0; i < batch; ++i) {
    streams.emplace_back(mix_seed(global_seed, first_index + static_cast<std::uint64_t>(i)));
  }
  auto draw = [&] {
    std::vector<torch::Tensor> parts;
    parts.reserve(streams.size());
    for (auto& s : streams) parts.push_back(s.normal(x.sizes().slice(1), x.scalar_type()));
    return torch::stack(parts);
  };
  auto x_delta = augment_condition(x, delta, draw());
  auto y = draw();
  for (int t = grid.steps(); t >= 1; --t) {
    y = refinement_step(denoiser, x_delta, y, t, grid, t > 1 ? draw() : torch::Tensor());
  }
  return y;
}

}  // namespace eegdiff::diffusion
