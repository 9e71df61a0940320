#include "eegdiff/data/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/core/rng.hpp"

namespace eegdiff::data {

namespace {

constexpr int kSplitCandidates = 32;

torch::Tensor apply_stats(const torch::Tensor& epochs, const NormalizationStats& stats) {
  const auto c = epochs.size(1);
  auto mean = torch::tensor(stats.mean, torch::kDouble).reshape({1, c, 1});
  auto stdev = torch::tensor(stats.stdev, torch::kDouble).reshape({1, c, 1});
  return ((epochs.to(torch::kDouble) - mean) / stdev).to(torch::kFloat).contiguous();
}

}  // namespace

NormalizationResult normalize(const LabeledDataset& dataset, std::span<const std::uint16_t> train_subjects) {
  if (dataset.normalization.applied) throw DataError("dataset is already normalized");
  std::vector<std::int64_t> rows;
  for (auto i : dataset.indices_of_subjects(train_subjects)) {
    if (dataset.provenance[static_cast<std::size_t>(i)] == Provenance::Real) rows.push_back(i);
  }
  if (rows.empty()) throw DataError("no real epochs from the training subjects to compute statistics");

  auto train = dataset.epochs.index_select(0, torch::tensor(rows, torch::kLong)).to(torch::kDouble);
  auto mean = train.mean({0, 2});
  auto var = train.var({0, 2}, /*unbiased=*/false);

  NormalizationResult result;
  NormalizationStats stats;
  stats.applied = true;
  for (std::int64_t ch = 0; ch < dataset.channels(); ++ch) {
    stats.mean.push_back(mean[ch].item<double>());
    const double v = var[ch].item<double>();
    if (v > 0.0) {
      stats.stdev.push_back(std::sqrt(v));
    } else {
      stats.stdev.push_back(1.0);
      const auto name = dataset.channel_names.empty() ? std::to_string(ch) : dataset.channel_names[ch];
      result.warnings.push_back("channel " + name + " has zero variance; using unit scale");
    }
  }
  result.dataset = dataset;
  result.dataset.epochs = apply_stats(dataset.epochs, stats);
  result.dataset.normalization = std::move(stats);
  return result;
}

LabeledDataset apply_normalization(const LabeledDataset& dataset, const NormalizationStats& stats) {
  if (dataset.normalization.applied) throw DataError("dataset is already normalized");
  if (!stats.applied) throw ArgumentError("statistics were never computed");
  if (static_cast<std::int64_t>(stats.mean.size()) != dataset.channels() ||
      static_cast<std::int64_t>(stats.stdev.size()) != dataset.channels()) {
    throw DataError("statistics do not match the channel count");
  }
  LabeledDataset out = dataset;
  out.epochs = apply_stats(dataset.epochs, stats);
  out.normalization = stats;
  return out;
}

std::array<int, 3> split_counts(int subjects, const std::array<double, 3>& ratios) {
  if (subjects < 3) throw DataError("need at least 3 subjects for a three-way split, got " + std::to_string(subjects));
  double total = 0;
  for (double r : ratios) {
    if (!(r > 0)) throw ArgumentError("split ratios must be positive");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("split ratios must sum to 1");

  std::array<int, 3> counts{};
  std::array<double, 3> frac{};
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = subjects * ratios[i];
    counts[i] = static_cast<int>(std::floor(exact + 1e-9));
    frac[i] = exact - counts[i];
    assigned += counts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b] + 1e-9; });
  for (int k = 0; assigned < subjects; ++k, ++assigned) counts[order[k % 3]] += 1;

  for (int i = 0; i < 3; ++i) {
    if (counts[i] == 0) {
      const int largest = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      counts[largest] -= 1;
      counts[i] = 1;
    }
  }
  return counts;
}

SplitSpec split_subject_independent(const LabeledDataset& dataset, const std::array<double, 3>& ratios,
                                    std::uint64_t seed) {
  const auto subjects = dataset.unique_subjects();
  const auto counts = split_counts(static_cast<int>(subjects.size()), ratios);

  std::map<std::uint16_t, std::pair<double, double>> tally;  // positives, total
  double positives = 0, total = 0;
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
    if (dataset.provenance[i] != Provenance::Real) continue;
    auto& t = tally[dataset.subjects[i]];
    t.first += dataset.labels[i];
    t.second += 1;
    positives += dataset.labels[i];
    total += 1;
  }
  const double global = total > 0 ? positives / total : 0.0;
  auto imbalance = [&](const std::vector<std::uint16_t>& ids) {
    double p = 0, n = 0;
    for (auto id : ids) {
      p += tally[id].first;
      n += tally[id].second;
    }
    return n > 0 ? std::abs(p / n - global) : 0.0;
  };

  SplitSpec best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kSplitCandidates; ++k) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    auto perm = torch::randperm(static_cast<std::int64_t>(subjects.size()), rng.generator(),
                                torch::TensorOptions().dtype(torch::kLong));
    auto p = perm.accessor<std::int64_t, 1>();
    SplitSpec candidate;
    candidate.ratios = ratios;
    for (std::int64_t i = 0; i < perm.size(0); ++i) {
      const auto id = subjects[static_cast<std::size_t>(p[i])];
      if (i < counts[0]) candidate.train.push_back(id);
      else if (i < counts[0] + counts[1]) candidate.val.push_back(id);
      else candidate.test.push_back(id);
    }
    const double score = imbalance(candidate.val) + imbalance(candidate.test);
    if (score < best_score - 1e-12) {
      best_score = score;
      best = std::move(candidate);
    }
  }
  for (auto* ids : {&best.train, &best.val, &best.test}) std::sort(ids->begin(), ids->end());
  return best;
}

}  // namespace eegdiff::data
