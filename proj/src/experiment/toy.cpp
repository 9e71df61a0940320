#include "eegdiff/experiment/toy.hpp"

#include <cmath>
#include <numbers>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/core/rng.hpp"

namespace eegdiff::experiment {

namespace {

data::LabeledDataset make_split(const ToyCorpusSpec& spec, int count, int subjects, std::uint64_t seed,
                                std::uint16_t first_subject) {
  Rng rng(seed);
  data::LabeledDataset d;
  d.target_name = "arousal";
  d.sample_rate = spec.sample_rate;
  d.channel_names = data::default_channel_names(spec.channels);
  auto t = torch::arange(spec.samples, torch::kDouble) / spec.sample_rate;
  auto epochs = torch::empty({count, spec.channels, spec.samples}, torch::kDouble);
  // Balanced labels in shuffled order.
  auto order = torch::randperm(count, rng.generator(), torch::TensorOptions().dtype(torch::kLong));
  for (int i = 0; i < count; ++i) {
    const int label = order[i].item<std::int64_t>() < count / 2 ? 0 : 1;
    for (int c = 0; c < spec.channels; ++c) {
      const double phase = 2 * std::numbers::pi * rng.uniform();
      epochs[i][c] = spec.amplitude * torch::sin(2 * std::numbers::pi * spec.frequency[label] * t + phase);
    }
    d.labels.push_back(static_cast<std::uint8_t>(label));
    d.subjects.push_back(static_cast<std::uint16_t>(first_subject + i % subjects));
    d.provenance.push_back(data::Provenance::Real);
  }
  epochs += spec.noise * rng.normal({count, spec.channels, spec.samples}, torch::kDouble);
  d.epochs = epochs.to(torch::kFloat).contiguous();
  return d;
}

}  // namespace

ToyCorpus make_toy_corpus(const ToyCorpusSpec& spec) {
  if (spec.channels < 1 || spec.samples < 2 || spec.train < 2 || spec.test < 2 ||
      spec.train_subjects < 1 || spec.test_subjects < 1 || spec.train_subjects > 99) {
    throw ArgumentError("toy corpus dimensions too small");
  }
  return {make_split(spec, spec.train, spec.train_subjects, mix_seed(spec.seed, 0), 1),
          make_split(spec, spec.test, spec.test_subjects, mix_seed(spec.seed, 1), 100)};
}

}  // namespace eegdiff::experiment
