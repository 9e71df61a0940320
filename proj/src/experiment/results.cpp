#include "eegdiff/experiment/results.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "eegdiff/core/errors.hpp"

namespace eegdiff::experiment {
namespace fs = std::filesystem;

namespace {

constexpr const char* kRunsHeader = "target,classifier,condition,delta,mix_percent,seed,fold,accuracy,balanced_accuracy";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void check_name(const std::string& s) {
  if (s.empty() || s.find_first_of(",\n\r") != std::string::npos) {
    throw ArgumentError("names stored in results must be non-empty and free of commas: '" + s + "'");
  }
}

}  // namespace

const char* to_string(Condition c) {
  switch (c) {
    case Condition::Real: return "real";
    case Condition::Synthetic: return "synthetic";
    case Condition::Noise: return "noise";
  }
  return "unknown";
}

Condition parse_condition(const std::string& name) {
  if (name == "real") return Condition::Real;
  if (name == "synthetic") return Condition::Synthetic;
  if (name == "noise") return Condition::Noise;
  throw DataError("unknown run condition '" + name + "'");
}

std::string format_delta(double delta) {
  std::ostringstream os;
  os << std::setprecision(6) << delta;
  return os.str();
}

std::string CellKey::describe() const {
  return target + "/" + classifier + "/" + to_string(condition) + "/delta=" + format_delta(delta) +
         "/mix=" + std::to_string(mix_percent) + "/seed=" + std::to_string(seed);
}

CellKey key_of(const RunRecord& r) {
  return {r.target, r.classifier, r.condition, r.delta, r.mix_percent, r.seed};
}

CellKey baseline_key(const std::string& target, const std::string& classifier, std::uint64_t seed) {
  return {target, classifier, Condition::Real, 0.0, 0, seed};
}

std::vector<RunRecord> read_runs(const fs::path& csv) {
  std::vector<RunRecord> out;
  std::ifstream in(csv);
  if (!in) return out;
  std::string line;
  if (!std::getline(in, line)) return out;
  if (line != kRunsHeader) throw DataError("unexpected header in " + csv.string());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) throw DataError(csv.string() + ":" + std::to_string(line_no) + ": expected 9 fields");
    try {
      RunRecord r;
      r.target = f[0];
      r.classifier = f[1];
      r.condition = parse_condition(f[2]);
      r.delta = std::stod(f[3]);
      r.mix_percent = std::stoi(f[4]);
      r.seed = std::stoull(f[5]);
      r.fold = std::stoi(f[6]);
      r.accuracy = std::stod(f[7]);
      r.balanced_accuracy = std::stod(f[8]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError(csv.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return out;
}

ResultsStore::ResultsStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  records_ = read_runs(dir_ / "runs.csv");
}

bool ResultsStore::has_cell(const CellKey& key, int folds) const {
  std::set<int> seen;
  for (const auto& r : records_) {
    if (key_of(r) == key) seen.insert(r.fold);
  }
  return static_cast<int>(seen.size()) >= folds;
}

void ResultsStore::append_cell(const std::vector<RunRecord>& folds) {
  if (folds.empty()) return;
  const auto path = dir_ / "runs.csv";
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ostringstream block;
  block << std::setprecision(std::numeric_limits<double>::max_digits10);
  if (fresh) block << kRunsHeader << '\n';
  for (const auto& r : folds) {
    check_name(r.target);
    check_name(r.classifier);
    block << r.target << ',' << r.classifier << ',' << to_string(r.condition) << ',' << format_delta(r.delta) << ','
          << r.mix_percent << ',' << r.seed << ',' << r.fold << ',' << r.accuracy << ',' << r.balanced_accuracy
          << '\n';
  }
  std::ofstream out(path, std::ios::app);
  out << block.str();
  out.flush();
  if (!out) throw RunError("failed to append to " + path.string());
  records_.insert(records_.end(), folds.begin(), folds.end());
}

void ResultsStore::record_failure(const CellKey& key, const std::string& message) {
  const auto path = dir_ / "failures.csv";
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (fresh) out << "cell,message\n";
  std::string clean = message;
  for (auto& ch : clean) {
    if (ch == '\n' || ch == ',') ch = ' ';
  }
  out << key.describe() << ',' << clean << '\n';
}

}  // namespace eegdiff::experiment
