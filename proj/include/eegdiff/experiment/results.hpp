#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace eegdiff::experiment {

enum class Condition { Real, Synthetic, Noise };

const char* to_string(Condition c);
Condition parse_condition(const std::string& name);

// One fold of one run cell.
struct RunRecord {
  std::string target;
  std::string classifier;
  Condition condition = Condition::Real;
  double delta = 0;
  int mix_percent = 0;
  std::uint64_t seed = 0;
  int fold = 0;
  double accuracy = 0;           // percent
  double balanced_accuracy = 0;  // percent
};

// Identifies a run cell: everything but the fold and the scores.
struct CellKey {
  std::string target;
  std::string classifier;
  Condition condition;
  double delta;
  int mix_percent;
  std::uint64_t seed;

  auto tie() const { return std::tie(target, classifier, condition, delta, mix_percent, seed); }
  bool operator<(const CellKey& o) const { return tie() < o.tie(); }
  bool operator==(const CellKey& o) const { return tie() == o.tie(); }
  std::string describe() const;
};

CellKey key_of(const RunRecord& r);

// Baseline cell of a (target, classifier, seed): real data only, no mix.
CellKey baseline_key(const std::string& target, const std::string& classifier, std::uint64_t seed);

// Append-only store: <dir>/runs.csv holds fold records, <dir>/failures.csv
// sub-run errors. A cell counts as done once all its folds are stored.
class ResultsStore {
 public:
  explicit ResultsStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::vector<RunRecord> records() const { return records_; }
  bool has_cell(const CellKey& key, int folds) const;
  // Writes all fold records of one cell in a single append.
  void append_cell(const std::vector<RunRecord>& folds);
  void record_failure(const CellKey& key, const std::string& message);

 private:
  std::filesystem::path dir_;
  std::vector<RunRecord> records_;
};

// Reads a runs.csv; returns no records when the file is missing.
std::vector<RunRecord> read_runs(const std::filesystem::path& csv);

// Delta rendered the way it is keyed and displayed ("0", "0.01", ...).
std::string format_delta(double delta);

}  // namespace eegdiff::experiment
