#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "eegdiff/core/rng.hpp"

namespace eegdiff::diffusion {

// Default ceiling on the terminal retention level. Sampling starts from pure
// noise, so the last step must leave almost none of the signal.
inline constexpr double kDefaultTerminalGammaCeiling = 0.01;

// Forward-process noise schedule. Step t (1-based) has retention alpha(t) and
// cumulative retention gamma(t) = alpha(1) * ... * alpha(t); gamma(0) == 1.
class NoiseSchedule {
 public:
  // Validates and takes ownership of the per-step alphas; gammas are the
  // running product in step order.
  explicit NoiseSchedule(std::vector<double> alphas,
                         double terminal_ceiling = kDefaultTerminalGammaCeiling);

  int steps() const { return static_cast<int>(alphas_.size()); }
  double alpha(int t) const;
  double gamma(int t) const;  // accepts t == 0

  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& gammas() const { return gammas_; }

 private:
  std::vector<double> alphas_;
  std::vector<double> gammas_;
};

// Linear beta ramp from beta_start to beta_end over `steps`; alpha = 1 - beta.
NoiseSchedule build_linear_schedule(int steps, double beta_start, double beta_end,
                                    double terminal_ceiling = kDefaultTerminalGammaCeiling);

// Sub-grid of `schedule` with `steps` points for inference. Grid point k
// keeps the parent's gamma at round(k * T / steps); alphas are the ratios of
// consecutive kept gammas. Legal because the denoiser is conditioned on gamma.
NoiseSchedule respace(const NoiseSchedule& schedule, int steps);

struct GammaDraw {
  double gamma;
  int t;
};

// Maps u in [0, 1) into the open interval (lo, hi); a collapsed interval
// (hi <= lo) yields lo.
double draw_in_segment(double lo, double hi, double u);

// Piece-wise uniform noise level: t ~ U{1..T}, gamma ~ U(gamma(t), gamma(t-1)).
GammaDraw sample_gamma(const NoiseSchedule& schedule, Rng& rng);

// Serialized sampler/schedule settings.
struct ScheduleConfig {
  int steps = 500;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int inference_steps = 500;
  double delta = 0.01;
  int loss_p = 2;
  std::uint64_t seed = 0;
  double terminal_ceiling = kDefaultTerminalGammaCeiling;

  NoiseSchedule build() const {
    return build_linear_schedule(steps, beta_start, beta_end, terminal_ceiling);
  }
};

void to_json(nlohmann::json& j, const ScheduleConfig& c);
void from_json(const nlohmann::json& j, ScheduleConfig& c);

}  // namespace eegdiff::diffusion
