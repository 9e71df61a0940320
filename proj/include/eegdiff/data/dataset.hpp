#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace eegdiff::data {

enum class Provenance : std::uint8_t { Real = 0, Synthetic = 1, NoiseControl = 2 };

const char* to_string(Provenance p);

// Targets a dataset can be labelled for.
inline constexpr const char* kTargetNames[] = {"arousal", "dominance", "liking", "valence", "vigilance"};
bool is_valid_target(const std::string& name);

struct NormalizationStats {
  bool applied = false;
  std::vector<double> mean;   // per channel
  std::vector<double> stdev;  // per channel
};

// Epochs with binary labels, subject ids and provenance tags. Epochs are a
// contiguous float32 tensor (N, channels, timesteps).
struct LabeledDataset {
  torch::Tensor epochs;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint16_t> subjects;
  std::vector<Provenance> provenance;
  std::string target_name;
  double sample_rate = 128.0;
  std::vector<std::string> channel_names;
  NormalizationStats normalization;
  // Synthetic epochs only: index of the real epoch that conditioned each one.
  std::vector<std::uint32_t> conditions;

  std::int64_t size() const { return epochs.defined() ? epochs.size(0) : 0; }
  std::int64_t channels() const { return epochs.size(1); }
  std::int64_t timesteps() const { return epochs.size(2); }

  // Throws DataError when any invariant is broken.
  void validate() const;

  LabeledDataset subset(std::span<const std::int64_t> indices) const;
  std::vector<std::int64_t> indices_of_subjects(std::span<const std::uint16_t> ids) const;
  std::vector<std::uint16_t> unique_subjects() const;
  // Fraction of label-1 epochs.
  double positive_rate() const;
};

// Concatenates b after a. Metadata (target, rate, channels, stats) comes from a.
LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

// Default channel names "ch00".."chNN".
std::vector<std::string> default_channel_names(std::int64_t count);

// Dataset directory: manifest.json + epochs.f32le + labels.u8 + subjects.u16
// + provenance.u8 (+ conditions.u32 for synthetic sets).
void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& dir);
LabeledDataset load_dataset(const std::filesystem::path& dir);

}  // namespace eegdiff::data
