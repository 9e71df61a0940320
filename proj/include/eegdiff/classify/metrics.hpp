#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace eegdiff::classify {

// Both in percent.
double accuracy(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted);
// Mean per-class recall over the classes present in `truth`.
double balanced_accuracy(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted);

struct EvalResult {
  double accuracy = 0;
  double balanced_accuracy = 0;
};

struct FoldReport {
  std::vector<double> fold_accuracies;  // percent, primary metric
  double mean = 0;
  double ci95 = 0;
  std::optional<double> baseline_mean;
  std::optional<double> gain;
};

// Mean and 1.96 * s / sqrt(k) with s the sample standard deviation.
FoldReport summarize_folds(std::vector<double> fold_accuracies);
FoldReport with_baseline(FoldReport report, double baseline_mean);

}  // namespace eegdiff::classify
