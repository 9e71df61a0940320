#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "eegdiff/classify/classifier.hpp"

namespace eegdiff::experiment {

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::string target_name = "arousal";
  std::vector<double> deltas{0.0, 0.01, 0.05, 0.1};
  std::vector<int> mix_percents{50, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  std::vector<classify::ClassifierSpec> classifiers;  // empty means svm, eegnet and tsception defaults
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "results";

  // Diffusion checkpoint used for every delta unless `checkpoints` has one
  // keyed by the formatted delta ("0.05").
  std::filesystem::path checkpoint;
  std::map<std::string, std::filesystem::path> checkpoints;

  int folds = 5;
  std::array<double, 3> split_ratios{0.70, 0.15, 0.15};
  std::uint64_t split_seed = 0;
  int inference_steps = 0;  // 0: take the checkpoint's setting
  int generation_batch = 64;

  void validate() const;
  std::vector<classify::ClassifierSpec> classifier_specs() const;
  std::filesystem::path checkpoint_for(double delta) const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& file);

}  // namespace eegdiff::experiment
