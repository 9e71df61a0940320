#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eegdiff/classify/classifier.hpp"
#include "eegdiff/data/dataset.hpp"
#include "eegdiff/data/preprocess.hpp"
#include "eegdiff/experiment/results.hpp"

namespace eegdiff::experiment {

// Real epochs the experiment may learn from (train + val subjects,
// normalized with train statistics) and the untouched test subjects.
struct PreparedData {
  data::LabeledDataset pool;
  data::LabeledDataset test;
  data::SplitSpec split;
  std::vector<std::string> warnings;
};

PreparedData prepare_dataset(const data::LabeledDataset& imported, const std::array<double, 3>& ratios,
                             std::uint64_t split_seed);

// Supplies `count` augmentation epochs for a seed. Row i must not depend on
// `count`, so smaller mixes are prefixes of larger ones.
using AugmentationSource = std::function<data::LabeledDataset(std::int64_t count, std::uint64_t seed)>;

struct SweepPlan {
  std::string target;
  std::vector<classify::ClassifierSpec> classifiers;
  std::vector<std::uint64_t> seeds;
  int folds = 5;
  Condition condition = Condition::Synthetic;
  double delta = 0;
  std::vector<int> mix_percents;
  AugmentationSource augmentation;
};

struct SweepStats {
  int completed = 0;
  int skipped = 0;
  int failed = 0;
};

// Seed of the cross-validation for (seed, target, classifier). Shared by the
// baseline and every augmented cell so folds and initialisations line up.
std::uint64_t cell_seed(std::uint64_t seed, const std::string& target, const std::string& classifier);

// Seed the augmentation set of (seed, condition, delta) is drawn with.
std::uint64_t augmentation_seed(std::uint64_t seed, Condition condition, double delta);

// Runs the baseline cell of every (classifier, seed) and one cell per mix.
// Cells already in `store` are skipped; a failing cell is logged to the
// store's failure file and the sweep moves on.
SweepStats run_sweep(ResultsStore& store, const data::LabeledDataset& pool, const data::LabeledDataset& test,
                     const SweepPlan& plan, const std::function<void(const std::string&)>& log = {});

}  // namespace eegdiff::experiment
