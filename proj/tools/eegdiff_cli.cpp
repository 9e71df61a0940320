#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/data/dataset.hpp"
#include "eegdiff/experiment/commands.hpp"
#include "eegdiff/experiment/toy.hpp"

namespace fs = std::filesystem;
using namespace eegdiff;
using namespace eegdiff::experiment;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRun = 3 };

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

template <typename T>
void override_with(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

struct ExperimentFlags {
  std::string config;
  std::optional<std::string> dataset, target, output, checkpoint;
  std::optional<std::vector<double>> deltas;
  std::optional<std::vector<int>> mixes;
  std::optional<std::vector<std::string>> classifiers;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<int> folds, inference_steps, batch;
  std::optional<std::uint64_t> split_seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON experiment config; flags override it");
    cmd->add_option("--dataset", dataset, "imported dataset directory");
    cmd->add_option("--target", target, "label target the dataset was imported for");
    cmd->add_option("--output", output, "results directory");
    cmd->add_option("--checkpoint", checkpoint, "diffusion checkpoint directory");
    cmd->add_option("--deltas", deltas, "generation noise levels");
    cmd->add_option("--mix", mixes, "synthetic share in percent of the real epochs");
    cmd->add_option("--classifiers", classifiers, "svm, eegnet, tsception");
    cmd->add_option("--seeds", seeds, "run seeds");
    cmd->add_option("--folds", folds, "cross-validation folds");
    cmd->add_option("--split-seed", split_seed, "subject split seed");
    cmd->add_option("--inference-steps", inference_steps, "refinement steps (0: checkpoint setting)");
    cmd->add_option("--generation-batch", batch, "epochs per generation batch");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_config(config);
    if (dataset) c.dataset = *dataset;
    if (output) c.output_dir = *output;
    if (checkpoint) c.checkpoint = *checkpoint;
    override_with(target, c.target_name);
    override_with(deltas, c.deltas);
    override_with(mixes, c.mix_percents);
    override_with(seeds, c.seeds);
    override_with(folds, c.folds);
    override_with(split_seed, c.split_seed);
    override_with(inference_steps, c.inference_steps);
    override_with(batch, c.generation_batch);
    if (classifiers) {
      c.classifiers.clear();
      for (const auto& name : *classifiers) {
        classify::ClassifierSpec spec;
        spec.kind = classify::parse_classifier_kind(name);
        c.classifiers.push_back(spec);
      }
    }
    if (c.dataset.empty()) throw ArgumentError("no dataset given");
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-based EEG augmentation experiments"};
  app.require_subcommand(1);

  std::string input, output, target = "arousal";
  int trials = 40;
  auto* deap = app.add_subcommand("import-deap", "import a DEAP-style directory");
  deap->add_option("--input", input, "source directory")->required();
  deap->add_option("--output", output, "dataset directory to write")->required();
  deap->add_option("--target", target, "valence, arousal, dominance or liking");
  deap->add_option("--trials", trials, "trials per subject (0: any)");

  auto* sadt = app.add_subcommand("import-sadt", "import an SADT-style directory");
  sadt->add_option("--input", input, "source directory")->required();
  sadt->add_option("--output", output, "dataset directory to write")->required();

  ToyCorpusSpec toy_spec;
  auto* toy = app.add_subcommand("make-toy", "write the two-class sinusoid corpus as one dataset");
  toy->add_option("--output", output, "dataset directory to write")->required();
  toy->add_option("--seed", toy_spec.seed);
  toy->add_option("--noise", toy_spec.noise, "white-noise standard deviation");

  std::string train_config;
  std::optional<std::string> train_dataset, train_output;
  std::optional<int> steps, batch_size, warmup, checkpoint_every;
  std::optional<double> lr, train_delta;
  std::optional<std::uint64_t> train_seed, train_split_seed;
  bool resume = false;
  auto* train = app.add_subcommand("train-diffusion", "train the conditional denoiser");
  train->add_option("--config", train_config, "JSON training config; flags override it");
  train->add_option("--dataset", train_dataset, "imported dataset directory");
  train->add_option("--output", train_output, "checkpoint directory");
  train->add_option("--steps", steps, "total optimisation steps");
  train->add_option("--batch-size", batch_size);
  train->add_option("--lr", lr, "peak learning rate");
  train->add_option("--warmup", warmup, "linear warm-up steps");
  train->add_option("--delta", train_delta, "condition noise during training");
  train->add_option("--seed", train_seed);
  train->add_option("--split-seed", train_split_seed);
  train->add_option("--checkpoint-every", checkpoint_every, "0 disables periodic checkpoints");
  train->add_flag("--resume", resume, "continue from the checkpoint in --output");

  GenerateConfig gen;
  auto* generate = app.add_subcommand("generate", "generate a synthetic dataset");
  generate->add_option("--checkpoint", gen.checkpoint)->required();
  generate->add_option("--dataset", gen.dataset)->required();
  generate->add_option("--output", gen.output)->required();
  generate->add_option("--delta", gen.delta);
  generate->add_option("--percent", gen.percent, "percent of the real train + val epoch count");
  generate->add_option("--seed", gen.seed);
  generate->add_option("--split-seed", gen.split_seed);
  generate->add_option("--inference-steps", gen.inference_steps);
  generate->add_option("--batch", gen.batch);

  ExperimentFlags mix_flags, noise_flags;
  auto* mix = app.add_subcommand("mix-experiment", "real + synthetic mix sweep");
  mix_flags.attach(mix);
  auto* noise = app.add_subcommand("noise-control", "real + Gaussian noise sweep");
  noise_flags.attach(noise);

  std::string results, metric = "balanced";
  auto* report = app.add_subcommand("report", "tables from stored runs");
  report->add_option("--results", results)->required();
  report->add_option("--metric", metric, "balanced or plain")->check(CLI::IsMember({"balanced", "plain"}));

  std::string kind;
  PlotOptions plot_opts;
  std::string plot_real, plot_out;
  std::vector<std::string> plot_synth;
  auto* plot = app.add_subcommand("plot", "SVG figures");
  plot->add_option("--results", results)->required();
  plot->add_option("--kind", kind, "tsne, overlay or sweep")->required();
  plot->add_option("--real", plot_real, "real dataset (default: the stored pool)");
  plot->add_option("--synthetic", plot_synth, "synthetic datasets (default: all stored sets)");
  plot->add_option("--output", plot_out, "figure directory (default: <results>/plots)");
  plot->add_option("--samples", plot_opts.samples, "t-SNE epochs per set");
  plot->add_option("--channel", plot_opts.channel);
  plot->add_option("--epoch", plot_opts.epoch, "synthetic epoch for the overlay");
  plot->add_option("--delta", plot_opts.delta, "sweep delta");
  plot->add_option("--seed", plot_opts.seed);
  plot->add_option("--iterations", plot_opts.tsne_iterations);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*deap) {
      data::DeapLayout layout;
      layout.trials = trials;
      auto d = cmd_import_deap(input, output, target, layout);
      std::cout << "imported " << d.size() << " epochs\n";
    } else if (*sadt) {
      auto d = cmd_import_sadt(input, output);
      std::cout << "imported " << d.size() << " epochs\n";
    } else if (*toy) {
      auto corpus = make_toy_corpus(toy_spec);
      auto d = data::concat(corpus.train, corpus.test);
      data::save_dataset(d, output);
      std::cout << "wrote " << d.size() << " epochs\n";
    } else if (*train) {
      TrainDiffusionConfig c;
      if (!train_config.empty()) {
        std::ifstream in(train_config);
        if (!in) throw ArgumentError("cannot open config " + train_config);
        nlohmann::json j;
        try {
          in >> j;
        } catch (const nlohmann::json::exception& e) {
          throw ArgumentError(std::string("config is not valid JSON: ") + e.what());
        }
        c = j.get<TrainDiffusionConfig>();
      }
      if (train_dataset) c.dataset = *train_dataset;
      if (train_output) c.output = *train_output;
      override_with(steps, c.training.steps);
      override_with(batch_size, c.training.batch_size);
      override_with(warmup, c.training.warmup_steps);
      override_with(checkpoint_every, c.training.checkpoint_every);
      override_with(lr, c.training.learning_rate);
      override_with(train_delta, c.training.delta);
      override_with(train_seed, c.training.seed);
      override_with(train_split_seed, c.split_seed);
      c.resume = c.resume || resume;
      if (c.dataset.empty()) throw ArgumentError("no dataset given");
      auto s = cmd_train_diffusion(c, log_line);
      std::cout << "trained steps " << s.start_step << " -> " << s.end_step << ", final loss " << s.final_loss
                << ", curve " << s.loss_csv.string() << '\n';
    } else if (*generate) {
      auto d = cmd_generate(gen, log_line);
      std::cout << "wrote " << d.size() << " synthetic epochs to " << gen.output.string() << '\n';
    } else if (*mix) {
      auto r = cmd_mix_experiment(mix_flags.resolve(), log_line);
      std::cout << render_tables(r);
    } else if (*noise) {
      auto r = cmd_noise_control(noise_flags.resolve(), log_line);
      std::cout << render_tables(r);
    } else if (*report) {
      std::cout << cmd_report(results, metric == "plain" ? Metric::Plain : Metric::Balanced).text;
    } else if (*plot) {
      if (!plot_real.empty()) plot_opts.real = plot_real;
      for (const auto& s : plot_synth) plot_opts.synthetic.emplace_back(s);
      if (!plot_out.empty()) plot_opts.output = plot_out;
      for (const auto& f : cmd_plot(results, parse_plot_kind(kind), plot_opts)) std::cout << f.string() << '\n';
    }
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "run failure: " << e.what() << '\n';
    return kRun;
  }
  return kOk;
}
