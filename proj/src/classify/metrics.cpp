#include "eegdiff/classify/metrics.hpp"

#include <cmath>
#include <numeric>

#include "eegdiff/core/errors.hpp"

namespace eegdiff::classify {

namespace {

void check_lengths(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted) {
  if (truth.size() != predicted.size()) throw ArgumentError("label vectors differ in length");
  if (truth.empty()) throw ArgumentError("cannot score an empty label vector");
}

}  // namespace

double accuracy(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted) {
  check_lengths(truth, predicted);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(truth.size());
}

double balanced_accuracy(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted) {
  check_lengths(truth, predicted);
  double hits[2] = {0, 0}, totals[2] = {0, 0};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int c = truth[i] ? 1 : 0;
    totals[c] += 1;
    hits[c] += truth[i] == predicted[i];
  }
  double sum = 0;
  int classes = 0;
  for (int c = 0; c < 2; ++c) {
    if (totals[c] > 0) {
      sum += hits[c] / totals[c];
      ++classes;
    }
  }
  return 100.0 * sum / classes;
}

FoldReport summarize_folds(std::vector<double> fold_accuracies) {
  if (fold_accuracies.empty()) throw ArgumentError("no fold accuracies to summarize");
  FoldReport r;
  const auto k = static_cast<double>(fold_accuracies.size());
  r.mean = std::accumulate(fold_accuracies.begin(), fold_accuracies.end(), 0.0) / k;
  if (fold_accuracies.size() > 1) {
    double ss = 0;
    for (double a : fold_accuracies) ss += (a - r.mean) * (a - r.mean);
    r.ci95 = 1.96 * std::sqrt(ss / (k - 1)) / std::sqrt(k);
  }
  r.fold_accuracies = std::move(fold_accuracies);
  return r;
}

FoldReport with_baseline(FoldReport report, double baseline_mean) {
  report.baseline_mean = baseline_mean;
  report.gain = report.mean - baseline_mean;
  return report;
}

}  // namespace eegdiff::classify
