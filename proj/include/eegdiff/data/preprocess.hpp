#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/data/dataset.hpp"

namespace eegdiff::data {

struct NormalizationResult {
  LabeledDataset dataset;
  std::vector<std::string> warnings;
};

// Per-channel z-score with statistics from the real epochs of
// `train_subjects`. Stats are stored in the dataset; a dataset that already
// carries applied stats is rejected.
NormalizationResult normalize(const LabeledDataset& dataset,
                              std::span<const std::uint16_t> train_subjects);

// Applies previously computed statistics (e.g. to a held-out set).
LabeledDataset apply_normalization(const LabeledDataset& dataset, const NormalizationStats& stats);

struct SplitSpec {
  std::vector<std::uint16_t> train;
  std::vector<std::uint16_t> val;
  std::vector<std::uint16_t> test;
  std::array<double, 3> ratios{0.70, 0.15, 0.15};
};

// Largest-remainder apportionment of n subjects; ties go to the earlier
// split, and an empty split borrows one subject from the largest.
std::array<int, 3> split_counts(int subjects, const std::array<double, 3>& ratios);

// Shuffles subjects by seed and apportions them with split_counts. When
// labels are available several seeded shuffles are scored and the one whose
// validation/test label balance is closest to the global rate is kept.
SplitSpec split_subject_independent(const LabeledDataset& dataset,
                                    const std::array<double, 3>& ratios = {0.70, 0.15, 0.15},
                                    std::uint64_t seed = 0);

}  // namespace eegdiff::data
