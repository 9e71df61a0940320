#include "eegdiff/model/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/core/rng.hpp"
#include "eegdiff/diffusion/process.hpp"

namespace eegdiff::model {
namespace fs = std::filesystem;

void to_json(nlohmann::json& j, const TrainOptions& o) {
  j = nlohmann::json{{"steps", o.steps},
                     {"batch_size", o.batch_size},
                     {"learning_rate", o.learning_rate},
                     {"beta1", o.beta1},
                     {"beta2", o.beta2},
                     {"warmup_steps", o.warmup_steps},
                     {"delta", o.delta},
                     {"loss_p", o.loss_p},
                     {"seed", o.seed},
                     {"checkpoint_every", o.checkpoint_every},
                     {"checkpoint_dir", o.checkpoint_dir.string()}};
}

void from_json(const nlohmann::json& j, TrainOptions& o) {
  TrainOptions d;
  o.steps = j.value("steps", d.steps);
  o.batch_size = j.value("batch_size", d.batch_size);
  o.learning_rate = j.value("learning_rate", d.learning_rate);
  o.beta1 = j.value("beta1", d.beta1);
  o.beta2 = j.value("beta2", d.beta2);
  o.warmup_steps = j.value("warmup_steps", d.warmup_steps);
  o.delta = j.value("delta", d.delta);
  o.loss_p = j.value("loss_p", d.loss_p);
  o.seed = j.value("seed", d.seed);
  o.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  o.checkpoint_dir = j.value("checkpoint_dir", std::string());
}

namespace {

std::shared_ptr<torch::optim::Adam> make_optimizer(const Denoiser& model, const TrainOptions& o) {
  return std::make_shared<torch::optim::Adam>(
      model.net->parameters(),
      torch::optim::AdamOptions(o.learning_rate).betas({o.beta1, o.beta2}));
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const fs::path& dir) {
  fs::create_directories(dir);
  torch::save(checkpoint.model.net, (dir / "model.pt").string());
  if (checkpoint.optimizer) torch::save(*checkpoint.optimizer, (dir / "optimizer.pt").string());
  nlohmann::json sidecar{{"config", checkpoint.model.config()},
                         {"grid", {checkpoint.model.grid().rows, checkpoint.model.grid().cols}},
                         {"schedule", checkpoint.schedule},
                         {"train", checkpoint.options},
                         {"step", checkpoint.step},
                         {"seed", checkpoint.options.seed}};
  std::ofstream out(dir / "checkpoint.json");
  out << sidecar.dump(2) << '\n';
  if (!out) throw DataError("failed to write checkpoint sidecar in " + dir.string());
}

Checkpoint load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "checkpoint.json");
  if (!in) throw DataError("no checkpoint.json in " + dir.string());
  nlohmann::json sidecar;
  try {
    in >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint sidecar: " + std::string(e.what()));
  }
  Checkpoint c;
  const auto grid = sidecar.at("grid");
  c.model = build_denoiser(sidecar.at("config").get<DenoiserConfig>(),
                           GridShape{grid.at(0).get<std::int64_t>(), grid.at(1).get<std::int64_t>()});
  c.schedule = sidecar.at("schedule").get<diffusion::ScheduleConfig>();
  c.options = sidecar.at("train").get<TrainOptions>();
  c.step = sidecar.at("step").get<int>();
  torch::load(c.model.net, (dir / "model.pt").string());
  if (fs::exists(dir / "optimizer.pt")) {
    c.optimizer = make_optimizer(c.model, c.options);
    torch::load(*c.optimizer, (dir / "optimizer.pt").string());
  }
  return c;
}

std::vector<LossPoint> train_denoiser(Checkpoint& checkpoint, const torch::Tensor& epochs,
                                      const diffusion::NoiseSchedule& schedule,
                                      const std::function<void(const LossPoint&)>& on_step) {
  const TrainOptions& o = checkpoint.options;
  if (epochs.dim() != 3 || epochs.size(0) == 0) throw ArgumentError("training needs a non-empty (N, C, L) set");
  if (o.batch_size < 1) throw ArgumentError("batch size must be positive");
  const auto grid = checkpoint.model.grid();
  if (epochs.size(1) != grid.rows || epochs.size(2) != grid.cols) {
    throw ArgumentError("training epochs do not match the denoiser grid");
  }
  if (!checkpoint.optimizer) checkpoint.optimizer = make_optimizer(checkpoint.model, o);
  auto& optimizer = *checkpoint.optimizer;
  auto& net = checkpoint.model.net;
  const auto predictor = checkpoint.model.predictor();
  const auto data = epochs.to(torch::kFloat).contiguous();
  const std::int64_t n = data.size(0);
  net->train();

  std::vector<LossPoint> curve;
  while (checkpoint.step < o.steps) {
    const int step = checkpoint.step;
    Rng rng(mix_seed(o.seed, static_cast<std::uint64_t>(step)));
    torch::manual_seed(mix_seed(o.seed ^ 0xD5A1ULL, static_cast<std::uint64_t>(step)));

    auto index = torch::randint(n, {o.batch_size}, rng.generator(), torch::TensorOptions().dtype(torch::kLong));
    auto batch = data.index_select(0, index);
    auto item = diffusion::make_training_batch(batch, schedule, o.delta, rng);

    const double warm = o.warmup_steps > 0 ? std::min(1.0, (step + 1.0) / o.warmup_steps) : 1.0;
    for (auto& group : optimizer.param_groups()) {
      static_cast<torch::optim::AdamOptions&>(group.options()).lr(o.learning_rate * warm);
    }
    optimizer.zero_grad();
    auto loss = diffusion::training_loss(predictor, item, o.loss_p);
    const double value = loss.item<double>();
    if (!std::isfinite(value)) {
      throw RunError("training diverged at step " + std::to_string(step) + " (non-finite loss)");
    }
    loss.backward();
    optimizer.step();

    checkpoint.step = step + 1;
    curve.push_back({checkpoint.step, value});
    if (on_step) on_step(curve.back());
    if (o.checkpoint_every > 0 && !o.checkpoint_dir.empty() && checkpoint.step % o.checkpoint_every == 0) {
      save_checkpoint(checkpoint, o.checkpoint_dir);
    }
  }
  net->eval();
  return curve;
}

void write_loss_curve(const std::vector<LossPoint>& curve, const fs::path& csv, bool append) {
  const bool header = !append || !fs::exists(csv);
  std::ofstream out(csv, append ? std::ios::app : std::ios::trunc);
  if (!out) throw DataError("cannot write loss curve " + csv.string());
  if (header) out << "step,loss\n";
  out << std::setprecision(9);
  for (const auto& p : curve) out << p.step << ',' << p.loss << '\n';
}

}  // namespace eegdiff::model
