#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eegdiff/experiment/results.hpp"

namespace eegdiff::experiment {

enum class Metric { Balanced, Plain };

// Aggregate of all fold records sharing (target, classifier, condition,
// delta, mix) across seeds.
struct ReportCell {
  std::string target;
  std::string classifier;
  Condition condition = Condition::Real;
  double delta = 0;
  int mix_percent = 0;
  std::vector<std::uint64_t> seeds;
  std::size_t n = 0;  // fold records
  double mean = 0;
  double ci95 = 0;
  std::optional<double> baseline_mean;  // over the same seeds
  std::optional<double> gain;
  bool best = false;  // largest gain in its (target, classifier) row

  bool is_baseline() const { return condition == Condition::Real && mix_percent == 0; }
};

struct Report {
  Metric metric = Metric::Balanced;
  std::vector<ReportCell> cells;
};

// Gains are recomputed from the fold records; a cell whose seeds lack a
// baseline gets no gain.
Report build_report(const std::vector<RunRecord>& records, Metric metric = Metric::Balanced);

// Markdown tables, one per target; numbers rounded to two decimals.
std::string render_tables(const Report& report);
void write_report_csv(const Report& report, const std::filesystem::path& csv);
void write_summary_json(const Report& report, const std::filesystem::path& json);

// Two-decimal presentation used everywhere in reports.
std::string format_2dp(double value);

}  // namespace eegdiff::experiment
