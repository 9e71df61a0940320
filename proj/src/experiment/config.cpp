#include "eegdiff/experiment/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/data/dataset.hpp"
#include "eegdiff/experiment/results.hpp"

namespace eegdiff::experiment {

void ExperimentConfig::validate() const {
  if (!data::is_valid_target(target_name)) throw ArgumentError("unknown target '" + target_name + "'");
  if (deltas.empty()) throw ArgumentError("at least one delta is required");
  for (double d : deltas) {
    if (!std::isfinite(d) || d < 0) throw ArgumentError("delta must be >= 0");
  }
  for (int m : mix_percents) {
    if (m <= 0) throw ArgumentError("mix percentages must be positive");
  }
  if (seeds.empty()) throw ArgumentError("at least one seed is required");
  if (folds < 2) throw ArgumentError("need at least 2 folds");
  if (generation_batch < 1) throw ArgumentError("generation batch must be positive");
  if (inference_steps < 0) throw ArgumentError("inference steps must be >= 0");
  for (const auto& s : classifiers) s.validate();
  for (const auto& [key, path] : checkpoints) {
    double d = 0;
    try {
      d = std::stod(key);
    } catch (const std::exception&) {
      throw ArgumentError("checkpoint key '" + key + "' is not a delta");
    }
    if (d < 0) throw ArgumentError("checkpoint key '" + key + "' is negative");
  }
}

std::vector<classify::ClassifierSpec> ExperimentConfig::classifier_specs() const {
  if (!classifiers.empty()) return classifiers;
  std::vector<classify::ClassifierSpec> out(3);
  out[0].kind = classify::ClassifierKind::SvmRbf;
  out[1].kind = classify::ClassifierKind::EEGNet;
  out[2].kind = classify::ClassifierKind::TSception;
  return out;
}

std::filesystem::path ExperimentConfig::checkpoint_for(double delta) const {
  for (const auto& [key, path] : checkpoints) {
    if (std::stod(key) == delta || key == format_delta(delta)) return path;
  }
  return checkpoint;
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"dataset", c.dataset.string()},
                     {"target_name", c.target_name},
                     {"deltas", c.deltas},
                     {"mix_percents", c.mix_percents},
                     {"classifiers", c.classifier_specs()},
                     {"seeds", c.seeds},
                     {"output_dir", c.output_dir.string()},
                     {"checkpoint", c.checkpoint.string()},
                     {"folds", c.folds},
                     {"split_ratios", c.split_ratios},
                     {"split_seed", c.split_seed},
                     {"inference_steps", c.inference_steps},
                     {"generation_batch", c.generation_batch}};
  auto& map = j["checkpoints"] = nlohmann::json::object();
  for (const auto& [k, v] : c.checkpoints) map[k] = v.string();
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const std::set<std::string> known{"dataset", "target_name", "deltas", "mix_percents", "classifiers",
                                           "seeds", "output_dir", "checkpoint", "checkpoints", "folds",
                                           "split_ratios", "split_seed", "inference_steps",
                                           "generation_batch"};
  if (!j.is_object()) throw ArgumentError("experiment config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ArgumentError("unknown config key '" + key + "'");
  }
  try {
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
    if (j.contains("target_name")) c.target_name = j.at("target_name").get<std::string>();
    if (j.contains("deltas")) c.deltas = j.at("deltas").get<std::vector<double>>();
    if (j.contains("mix_percents")) c.mix_percents = j.at("mix_percents").get<std::vector<int>>();
    if (j.contains("classifiers")) c.classifiers = j.at("classifiers").get<std::vector<classify::ClassifierSpec>>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("checkpoint")) c.checkpoint = j.at("checkpoint").get<std::string>();
    if (j.contains("checkpoints")) {
      c.checkpoints.clear();
      for (const auto& [k, v] : j.at("checkpoints").items()) c.checkpoints[k] = v.get<std::string>();
    }
    if (j.contains("folds")) c.folds = j.at("folds").get<int>();
    if (j.contains("split_ratios")) c.split_ratios = j.at("split_ratios").get<std::array<double, 3>>();
    if (j.contains("split_seed")) c.split_seed = j.at("split_seed").get<std::uint64_t>();
    if (j.contains("inference_steps")) c.inference_steps = j.at("inference_steps").get<int>();
    if (j.contains("generation_batch")) c.generation_batch = j.at("generation_batch").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("bad experiment config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ArgumentError("cannot open config " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError("config " + file.string() + " is not valid JSON: " + e.what());
  }
  ExperimentConfig c = j.get<ExperimentConfig>();
  c.validate();
  return c;
}

}  // namespace eegdiff::experiment
