#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eegdiff/data/dataset.hpp"
#include "eegdiff/data/importers.hpp"
#include "eegdiff/diffusion/schedule.hpp"
#include "eegdiff/experiment/config.hpp"
#include "eegdiff/experiment/report.hpp"
#include "eegdiff/model/denoiser.hpp"
#include "eegdiff/model/trainer.hpp"

namespace eegdiff::experiment {

using Logger = std::function<void(const std::string&)>;

data::LabeledDataset cmd_import_deap(const std::filesystem::path& source, const std::filesystem::path& output,
                                     const std::string& target, const data::DeapLayout& layout = {});
data::LabeledDataset cmd_import_sadt(const std::filesystem::path& source, const std::filesystem::path& output,
                                     const data::SadtLayout& layout = {});

struct TrainDiffusionConfig {
  std::filesystem::path dataset;
  std::filesystem::path output;  // checkpoint directory, loss.csv goes next to the checkpoint files
  std::array<double, 3> split_ratios{0.70, 0.15, 0.15};
  std::uint64_t split_seed = 0;
  model::DenoiserConfig model;
  diffusion::ScheduleConfig schedule;
  model::TrainOptions training;
  // Continue from the checkpoint in `output` up to training.steps.
  bool resume = false;
  int log_every = 100;
};

void to_json(nlohmann::json& j, const TrainDiffusionConfig& c);
void from_json(const nlohmann::json& j, TrainDiffusionConfig& c);

struct TrainSummary {
  int start_step = 0;
  int end_step = 0;
  double final_loss = 0;
  std::filesystem::path loss_csv;
};

// Trains on the real train + val epochs of the split (test subjects never
// reach the denoiser) and writes the checkpoint and loss.csv.
TrainSummary cmd_train_diffusion(const TrainDiffusionConfig& config, const Logger& log = {});

struct GenerateConfig {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  std::filesystem::path output;
  double delta = 0.01;
  double percent = 100;
  std::uint64_t seed = 0;
  std::array<double, 3> split_ratios{0.70, 0.15, 0.15};
  std::uint64_t split_seed = 0;
  int inference_steps = 0;  // 0: the checkpoint's setting
  int batch = 64;
};

// percent% of the real train + val epoch count, conditioned on those epochs.
data::LabeledDataset cmd_generate(const GenerateConfig& config, const Logger& log = {});

// Real baseline plus one cell per (delta, mix, classifier, seed); results go
// to config.output_dir and the report is rewritten at the end.
Report cmd_mix_experiment(const ExperimentConfig& config, const Logger& log = {});

// Same protocol with standard-normal epochs in place of synthetic ones.
Report cmd_noise_control(const ExperimentConfig& config, const Logger& log = {});

struct ReportOutput {
  Report report;
  std::string text;
};

// Rebuilds the report from runs.csv in `results`; writes report.md,
// report.csv and summary.json. An empty store yields "no runs".
ReportOutput cmd_report(const std::filesystem::path& results, Metric metric = Metric::Balanced);

enum class PlotKind { Tsne, Overlay, Sweep };
PlotKind parse_plot_kind(const std::string& name);

struct PlotOptions {
  // tsne / overlay inputs; default to the sets stored under the results dir.
  std::filesystem::path real;
  std::vector<std::filesystem::path> synthetic;
  std::filesystem::path output;  // default <results>/plots
  int samples = 500;
  int channel = 0;
  int epoch = 0;
  double delta = 0.01;  // sweep: which synthetic delta to chart
  std::uint64_t seed = 0;
  int tsne_iterations = 1000;
};

std::vector<std::filesystem::path> cmd_plot(const std::filesystem::path& results, PlotKind kind,
                                            const PlotOptions& options = {});

// Layout of a results directory.
std::filesystem::path pool_dir(const std::filesystem::path& results);
std::filesystem::path test_dir(const std::filesystem::path& results);
std::filesystem::path synthetic_root(const std::filesystem::path& results);

}  // namespace eegdiff::experiment
