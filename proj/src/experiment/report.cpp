#include "eegdiff/experiment/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eegdiff/classify/metrics.hpp"
#include "eegdiff/core/errors.hpp"

namespace eegdiff::experiment {

std::string format_2dp(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

namespace {

using ColumnKey = std::tuple<Condition, double, int>;
using RowKey = std::pair<std::string, std::string>;

double metric_of(const RunRecord& r, Metric m) { return m == Metric::Balanced ? r.balanced_accuracy : r.accuracy; }

std::string column_label(const ReportCell& c) {
  if (c.is_baseline()) return "baseline (real)";
  if (c.condition == Condition::Noise) return "real+noise " + std::to_string(c.mix_percent) + "%";
  return "real+synthetic Δ=" + format_delta(c.delta) + " " + std::to_string(c.mix_percent) + "%";
}

}  // namespace

Report build_report(const std::vector<RunRecord>& records, Metric metric) {
  std::map<std::tuple<std::string, std::string, Condition, double, int>, std::map<std::uint64_t, std::vector<double>>>
      groups;
  for (const auto& r : records) {
    groups[{r.target, r.classifier, r.condition, r.delta, r.mix_percent}][r.seed].push_back(metric_of(r, metric));
  }
  Report report;
  report.metric = metric;
  for (const auto& [key, by_seed] : groups) {
    ReportCell cell;
    std::tie(cell.target, cell.classifier, cell.condition, cell.delta, cell.mix_percent) = key;
    std::vector<double> values;
    for (const auto& [seed, v] : by_seed) {
      cell.seeds.push_back(seed);
      values.insert(values.end(), v.begin(), v.end());
    }
    const auto summary = classify::summarize_folds(values);
    cell.n = values.size();
    cell.mean = summary.mean;
    cell.ci95 = summary.ci95;
    report.cells.push_back(cell);
  }

  for (auto& cell : report.cells) {
    auto it = groups.find({cell.target, cell.classifier, Condition::Real, 0.0, 0});
    if (it == groups.end()) continue;
    std::vector<double> base;
    bool complete = true;
    for (auto seed : cell.seeds) {
      auto s = it->second.find(seed);
      if (s == it->second.end()) {
        complete = false;
        break;
      }
      base.insert(base.end(), s->second.begin(), s->second.end());
    }
    if (!complete || base.empty()) continue;
    cell.baseline_mean = classify::summarize_folds(base).mean;
    cell.gain = cell.mean - *cell.baseline_mean;
  }

  std::map<RowKey, ReportCell*> best;
  for (auto& cell : report.cells) {
    if (cell.is_baseline() || !cell.gain) continue;
    auto& slot = best[{cell.target, cell.classifier}];
    if (!slot || *cell.gain > *slot->gain) slot = &cell;
  }
  for (auto& [row, cell] : best) cell->best = true;
  return report;
}

std::string render_tables(const Report& report) {
  std::ostringstream os;
  if (report.cells.empty()) {
    os << "no runs\n";
    return os.str();
  }
  std::set<std::string> targets;
  for (const auto& c : report.cells) targets.insert(c.target);
  for (const auto& target : targets) {
    std::set<ColumnKey> columns;
    std::set<std::string> classifiers;
    for (const auto& c : report.cells) {
      if (c.target != target) continue;
      classifiers.insert(c.classifier);
      if (!c.is_baseline()) columns.insert({c.condition, c.delta, c.mix_percent});
    }
    auto find = [&](const std::string& clf, Condition cond, double delta, int mix) -> const ReportCell* {
      for (const auto& c : report.cells) {
        if (c.target == target && c.classifier == clf && c.condition == cond && c.delta == delta &&
            c.mix_percent == mix) {
          return &c;
        }
      }
      return nullptr;
    };
    os << "### " << target << " (" << (report.metric == Metric::Balanced ? "balanced accuracy" : "accuracy")
       << ", %)\n\n| classifier | baseline (real) |";
    for (const auto& [cond, delta, mix] : columns) {
      ReportCell probe;
      probe.condition = cond;
      probe.delta = delta;
      probe.mix_percent = mix;
      os << ' ' << column_label(probe) << " | gain |";
    }
    os << "\n|---|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) os << "---|---|";
    os << '\n';
    for (const auto& clf : classifiers) {
      os << "| " << clf << " | ";
      if (const auto* b = find(clf, Condition::Real, 0.0, 0)) {
        os << format_2dp(b->mean) << " ± " << format_2dp(b->ci95);
      } else {
        os << "n/a";
      }
      os << " |";
      for (const auto& [cond, delta, mix] : columns) {
        const auto* c = find(clf, cond, delta, mix);
        if (!c) {
          os << " - | - |";
          continue;
        }
        os << ' ' << format_2dp(c->mean) << " ± " << format_2dp(c->ci95) << " | ";
        if (c->gain) {
          os << (c->best ? "**" : "") << format_2dp(*c->gain) << (c->best ? "**" : "");
        } else {
          os << "n/a";
        }
        os << " |";
      }
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

void write_report_csv(const Report& report, const std::filesystem::path& csv) {
  std::ofstream out(csv);
  if (!out) throw RunError("cannot write " + csv.string());
  out << "target,classifier,condition,delta,mix_percent,seeds,n,mean,ci95,baseline_mean,gain,best\n";
  out << std::setprecision(10);
  for (const auto& c : report.cells) {
    out << c.target << ',' << c.classifier << ',' << to_string(c.condition) << ',' << format_delta(c.delta) << ','
        << c.mix_percent << ',' << c.seeds.size() << ',' << c.n << ',' << c.mean << ',' << c.ci95 << ',';
    if (c.baseline_mean) out << *c.baseline_mean;
    else out << "n/a";
    out << ',';
    if (c.gain) out << *c.gain;
    else out << "n/a";
    out << ',' << (c.best ? 1 : 0) << '\n';
  }
}

void write_summary_json(const Report& report, const std::filesystem::path& path) {
  nlohmann::json root = nlohmann::json::object();
  root["metric"] = report.metric == Metric::Balanced ? "balanced_accuracy" : "accuracy";
  nlohmann::json targets = nlohmann::json::object();
  for (const auto& c : report.cells) {
    auto& row = targets[c.target][c.classifier];
    nlohmann::json entry{{"mean", c.mean}, {"ci95", c.ci95}, {"n", c.n}};
    if (c.is_baseline()) {
      row["baseline"] = entry;
      continue;
    }
    entry["condition"] = to_string(c.condition);
    entry["delta"] = c.delta;
    entry["mix_percent"] = c.mix_percent;
    entry["gain"] = c.gain ? nlohmann::json(*c.gain) : nlohmann::json(nullptr);
    entry["best"] = c.best;
    row["augmented"].push_back(entry);
  }
  root["targets"] = targets;
  std::ofstream out(path);
  out << root.dump(2) << '\n';
  if (!out) throw RunError("cannot write " + path.string());
}

}  // namespace eegdiff::experiment
