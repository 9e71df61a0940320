#include "eegdiff/experiment/synthesis.hpp"

#include <cmath>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/core/rng.hpp"
#include "eegdiff/diffusion/process.hpp"

namespace eegdiff::experiment {

namespace {

constexpr std::uint64_t kConditionStream = 0x636F6E64ULL;
constexpr std::uint64_t kLabelStream = 0x6C61626CULL;

}  // namespace

std::int64_t synthetic_count(std::int64_t real_epochs, double percent) {
  if (real_epochs < 0 || !(percent >= 0)) throw ArgumentError("synthetic count needs non-negative inputs");
  return static_cast<std::int64_t>(std::llround(static_cast<double>(real_epochs) * percent / 100.0));
}

data::LabeledDataset generate_synthetic(const model::Denoiser& model, const diffusion::NoiseSchedule& schedule,
                                        const data::LabeledDataset& source, std::int64_t count, double delta,
                                        std::uint64_t seed, int steps, int batch) {
  if (source.size() == 0) throw DataError("no conditioning epochs available");
  if (count < 0 || batch < 1) throw ArgumentError("invalid synthetic count or batch size");
  const auto grid = model.grid();
  if (source.channels() != grid.rows || source.timesteps() != grid.cols) {
    throw DataError("checkpoint expects " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                    " epochs, dataset has " + std::to_string(source.channels()) + "x" +
                    std::to_string(source.timesteps()));
  }
  data::LabeledDataset out;
  out.target_name = source.target_name;
  out.sample_rate = source.sample_rate;
  out.channel_names = source.channel_names;
  out.normalization = source.normalization;
  std::vector<std::int64_t> rows;
  for (std::int64_t i = 0; i < count; ++i) {
    Rng pick(mix_seed(seed ^ kConditionStream, static_cast<std::uint64_t>(i)));
    const auto row = pick.uniform_int(0, source.size() - 1);
    rows.push_back(row);
    out.labels.push_back(source.labels[static_cast<std::size_t>(row)]);
    out.subjects.push_back(source.subjects[static_cast<std::size_t>(row)]);
    out.provenance.push_back(data::Provenance::Synthetic);
    out.conditions.push_back(static_cast<std::uint32_t>(row));
  }
  if (count == 0) {
    out.epochs = torch::empty({0, source.channels(), source.timesteps()});
    return out;
  }
  auto net = model.net;
  net->eval();
  const auto predictor = model.predictor();
  std::vector<torch::Tensor> parts;
  for (std::int64_t start = 0; start < count; start += batch) {
    const auto end = std::min(count, start + batch);
    auto idx = torch::tensor(std::vector<std::int64_t>(rows.begin() + start, rows.begin() + end), torch::kLong);
    auto x = source.epochs.index_select(0, idx);
    parts.push_back(diffusion::generate_batch(predictor, x, delta, schedule, steps, seed,
                                              static_cast<std::uint64_t>(start)));
  }
  out.epochs = torch::cat(parts, 0).to(torch::kFloat).contiguous();
  return out;
}

data::LabeledDataset make_noise_control(const data::LabeledDataset& reference, std::int64_t count,
                                        std::uint64_t seed) {
  if (reference.size() == 0) throw DataError("noise control needs a reference set for shape and class balance");
  if (count < 0) throw ArgumentError("invalid noise-control count");
  const double positive = reference.positive_rate();
  data::LabeledDataset out;
  out.target_name = reference.target_name;
  out.sample_rate = reference.sample_rate;
  out.channel_names = reference.channel_names;
  out.normalization = reference.normalization;
  out.epochs = torch::empty({count, reference.channels(), reference.timesteps()});
  for (std::int64_t i = 0; i < count; ++i) {
    Rng stream(mix_seed(seed, static_cast<std::uint64_t>(i)));
    out.epochs[i].copy_(stream.normal({reference.channels(), reference.timesteps()}));
    Rng label(mix_seed(seed ^ kLabelStream, static_cast<std::uint64_t>(i)));
    out.labels.push_back(label.uniform() < positive ? 1 : 0);
    out.subjects.push_back(0);
    out.provenance.push_back(data::Provenance::NoiseControl);
  }
  return out;
}

}  // namespace eegdiff::experiment
