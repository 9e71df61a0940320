#include "eegdiff/experiment/sweep.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/core/rng.hpp"
#include "eegdiff/experiment/synthesis.hpp"

namespace eegdiff::experiment {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<RunRecord> to_records(const CellKey& key, const classify::CrossvalResult& r) {
  std::vector<RunRecord> out;
  for (std::size_t f = 0; f < r.balanced.fold_accuracies.size(); ++f) {
    RunRecord rec;
    rec.target = key.target;
    rec.classifier = key.classifier;
    rec.condition = key.condition;
    rec.delta = key.delta;
    rec.mix_percent = key.mix_percent;
    rec.seed = key.seed;
    rec.fold = static_cast<int>(f);
    rec.balanced_accuracy = r.balanced.fold_accuracies[f];
    rec.accuracy = r.plain.fold_accuracies[f];
    out.push_back(rec);
  }
  return out;
}

data::LabeledDataset prefix(const data::LabeledDataset& d, std::int64_t count) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(count));
  std::iota(idx.begin(), idx.end(), 0);
  return d.subset(idx);
}

}  // namespace

PreparedData prepare_dataset(const data::LabeledDataset& imported, const std::array<double, 3>& ratios,
                             std::uint64_t split_seed) {
  imported.validate();
  for (auto p : imported.provenance) {
    if (p != data::Provenance::Real) throw DataError("experiments start from real epochs only");
  }
  PreparedData out;
  out.split = data::split_subject_independent(imported, ratios, split_seed);
  auto norm = data::normalize(imported, out.split.train);
  out.warnings = std::move(norm.warnings);
  std::vector<std::uint16_t> pool_subjects = out.split.train;
  pool_subjects.insert(pool_subjects.end(), out.split.val.begin(), out.split.val.end());
  out.pool = norm.dataset.subset(norm.dataset.indices_of_subjects(pool_subjects));
  out.test = norm.dataset.subset(norm.dataset.indices_of_subjects(out.split.test));
  return out;
}

std::uint64_t cell_seed(std::uint64_t seed, const std::string& target, const std::string& classifier) {
  return mix_seed(seed, fnv1a(target + "/" + classifier));
}

std::uint64_t augmentation_seed(std::uint64_t seed, Condition condition, double delta) {
  return mix_seed(seed, fnv1a(std::string(to_string(condition)) + "/" + format_delta(delta)));
}

SweepStats run_sweep(ResultsStore& store, const data::LabeledDataset& pool, const data::LabeledDataset& test,
                     const SweepPlan& plan, const std::function<void(const std::string&)>& log) {
  if (plan.condition == Condition::Real) throw ArgumentError("a sweep augments with synthetic or noise epochs");
  if (!plan.mix_percents.empty() && !plan.augmentation) throw ArgumentError("sweep has mixes but no augmentation source");
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };
  SweepStats stats;
  auto run_cell = [&](const CellKey& key, const classify::ClassifierSpec& spec, const data::LabeledDataset* aug) {
    if (store.has_cell(key, plan.folds)) {
      ++stats.skipped;
      say("skip " + key.describe());
      return;
    }
    try {
      auto result = classify::crossval_evaluate(spec, pool, test, plan.folds,
                                                cell_seed(key.seed, key.target, key.classifier), aug);
      store.append_cell(to_records(key, result));
      ++stats.completed;
      say("done " + key.describe());
    } catch (const std::exception& e) {
      store.record_failure(key, e.what());
      ++stats.failed;
      say("FAILED " + key.describe() + ": " + e.what());
    }
  };

  int max_mix = 0;
  for (int m : plan.mix_percents) max_mix = std::max(max_mix, m);
  const auto max_count = synthetic_count(pool.size(), max_mix);

  for (auto seed : plan.seeds) {
    for (const auto& spec : plan.classifiers) {
      run_cell(baseline_key(plan.target, classify::to_string(spec.kind), seed), spec, nullptr);
    }
    std::vector<std::pair<CellKey, const classify::ClassifierSpec*>> pending;
    for (int mix : plan.mix_percents) {
      for (const auto& spec : plan.classifiers) {
        CellKey key{plan.target, classify::to_string(spec.kind), plan.condition, plan.delta, mix, seed};
        if (store.has_cell(key, plan.folds)) {
          ++stats.skipped;
          say("skip " + key.describe());
        } else {
          pending.emplace_back(key, &spec);
        }
      }
    }
    if (pending.empty()) continue;
    std::optional<data::LabeledDataset> augmentation;
    try {
      augmentation = plan.augmentation(max_count, augmentation_seed(seed, plan.condition, plan.delta));
      if (augmentation->size() < max_count) throw RunError("augmentation source returned too few epochs");
    } catch (const std::exception& e) {
      for (const auto& [key, spec] : pending) {
        store.record_failure(key, e.what());
        ++stats.failed;
      }
      say(std::string("FAILED augmentation for seed ") + std::to_string(seed) + ": " + e.what());
      continue;
    }
    for (const auto& [key, spec] : pending) {
      auto part = prefix(*augmentation, synthetic_count(pool.size(), key.mix_percent));
      run_cell(key, *spec, &part);
    }
  }
  return stats;
}

}  // namespace eegdiff::experiment
