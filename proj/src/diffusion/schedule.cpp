#include "eegdiff/diffusion/schedule.hpp"

#include <cmath>
#include <string>

#include "eegdiff/core/errors.hpp"

namespace eegdiff::diffusion {

NoiseSchedule::NoiseSchedule(std::vector<double> alphas, double terminal_ceiling)
    : alphas_(std::move(alphas)) {
  if (alphas_.empty()) throw ArgumentError("noise schedule needs at least one step");
  gammas_.reserve(alphas_.size());
  double running = 1.0;
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    const double a = alphas_[i];
    if (!(a > 0.0 && a < 1.0)) {
      throw ArgumentError("alpha at step " + std::to_string(i + 1) + " outside (0, 1)");
    }
    running *= a;
    gammas_.push_back(running);
  }
  if (gammas_.back() > terminal_ceiling) {
    throw ArgumentError("terminal gamma " + std::to_string(gammas_.back()) +
                        " exceeds ceiling " + std::to_string(terminal_ceiling));
  }
}

double NoiseSchedule::alpha(int t) const {
  if (t < 1 || t > steps()) throw ArgumentError("step index out of range");
  return alphas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::gamma(int t) const {
  if (t == 0) return 1.0;
  if (t < 0 || t > steps()) throw ArgumentError("step index out of range");
  return gammas_[static_cast<std::size_t>(t - 1)];
}

NoiseSchedule build_linear_schedule(int steps, double beta_start, double beta_end,
                                    double terminal_ceiling) {
  if (steps < 1) throw ArgumentError("schedule needs T >= 1");
  if (!(beta_start > 0.0 && beta_start < 1.0) || !(beta_end > 0.0 && beta_end < 1.0)) {
    throw ArgumentError("beta endpoints must lie in (0, 1)");
  }
  if (beta_start > beta_end) throw ArgumentError("beta_start must not exceed beta_end");
  std::vector<double> alphas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    alphas[static_cast<std::size_t>(i)] = 1.0 - beta;
  }
  return NoiseSchedule(std::move(alphas), terminal_ceiling);
}

NoiseSchedule respace(const NoiseSchedule& schedule, int steps) {
  const int total = schedule.steps();
  if (steps < 1 || steps > total) throw ArgumentError("respaced step count must be in [1, T]");
  if (steps == total) return schedule;
  std::vector<double> alphas;
  alphas.reserve(static_cast<std::size_t>(steps));
  double previous = 1.0;
  for (int k = 1; k <= steps; ++k) {
    const auto parent = static_cast<int>(std::lround(static_cast<double>(k) * total / steps));
    const double g = schedule.gamma(parent);
    alphas.push_back(g / previous);
    previous = g;
  }
  // The kept terminal gamma equals the parent's, so the parent's ceiling holds.
  return NoiseSchedule(std::move(alphas), 1.0);
}

double draw_in_segment(double lo, double hi, double u) {
  if (!(hi > lo)) return lo;
  double g = lo + (hi - lo) * u;
  if (g <= lo) g = std::nextafter(lo, hi);
  if (g >= hi) g = std::nextafter(hi, lo);
  return g;
}

GammaDraw sample_gamma(const NoiseSchedule& schedule, Rng& rng) {
  const int t = static_cast<int>(rng.uniform_int(1, schedule.steps()));
  return {draw_in_segment(schedule.gamma(t), schedule.gamma(t - 1), rng.uniform()), t};
}

void to_json(nlohmann::json& j, const ScheduleConfig& c) {
  j = nlohmann::json{{"T", c.steps},
                     {"beta_start", c.beta_start},
                     {"beta_end", c.beta_end},
                     {"inference_steps", c.inference_steps},
                     {"delta", c.delta},
                     {"loss_p", c.loss_p},
                     {"seed", c.seed},
                     {"terminal_ceiling", c.terminal_ceiling}};
}

void from_json(const nlohmann::json& j, ScheduleConfig& c) {
  ScheduleConfig d;
  c.steps = j.value("T", d.steps);
  c.beta_start = j.value("beta_start", d.beta_start);
  c.beta_end = j.value("beta_end", d.beta_end);
  c.inference_steps = j.value("inference_steps", c.steps);
  c.delta = j.value("delta", d.delta);
  c.loss_p = j.value("loss_p", d.loss_p);
  c.seed = j.value("seed", d.seed);
  c.terminal_ceiling = j.value("terminal_ceiling", d.terminal_ceiling);
}

}  // namespace eegdiff::diffusion
