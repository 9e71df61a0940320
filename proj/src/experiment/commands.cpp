#include "eegdiff/experiment/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/core/rng.hpp"
#include "eegdiff/experiment/plot.hpp"
#include "eegdiff/experiment/results.hpp"
#include "eegdiff/experiment/sweep.hpp"
#include "eegdiff/experiment/synthesis.hpp"
#include "eegdiff/experiment/tsne.hpp"

namespace fs = std::filesystem;

namespace eegdiff::experiment {

namespace {

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

void write_json(const nlohmann::json& j, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw RunError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

data::LabeledDataset load_input(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw DataError("no dataset at " + dir.string());
  return data::load_dataset(dir);
}

model::Checkpoint load_input_checkpoint(const fs::path& dir) {
  if (!fs::exists(dir / "checkpoint.json")) throw DataError("no checkpoint at " + dir.string());
  return model::load_checkpoint(dir);
}

nlohmann::json split_json(const PreparedData& p) {
  return {{"train", p.split.train},
          {"val", p.split.val},
          {"test", p.split.test},
          {"pool_epochs", p.pool.size()},
          {"test_epochs", p.test.size()}};
}

data::LabeledDataset prefix(const data::LabeledDataset& d, std::int64_t count) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(count));
  std::iota(idx.begin(), idx.end(), 0);
  return d.subset(idx);
}

struct Workspace {
  PreparedData data;
  std::vector<classify::ClassifierSpec> classifiers;
};

Workspace open_workspace(const ExperimentConfig& config, const Logger& log) {
  config.validate();
  auto imported = load_input(config.dataset);
  if (imported.target_name != config.target_name) {
    throw ArgumentError("dataset is labelled for '" + imported.target_name + "', config asks for '" +
                        config.target_name + "'");
  }
  Workspace ws{prepare_dataset(imported, config.split_ratios, config.split_seed), config.classifier_specs()};
  for (const auto& w : ws.data.warnings) say(log, "warning: " + w);
  fs::create_directories(config.output_dir);
  data::save_dataset(ws.data.pool, pool_dir(config.output_dir));
  data::save_dataset(ws.data.test, test_dir(config.output_dir));
  write_json(split_json(ws.data), config.output_dir / "split.json");
  write_json(config, config.output_dir / "config.json");
  say(log, "pool " + std::to_string(ws.data.pool.size()) + " epochs, test " + std::to_string(ws.data.test.size()));
  return ws;
}

std::string log_summary(const SweepStats& s) {
  return std::to_string(s.completed) + " cells run, " + std::to_string(s.skipped) + " skipped, " +
         std::to_string(s.failed) + " failed";
}

}  // namespace

fs::path pool_dir(const fs::path& results) { return results / "data" / "pool"; }
fs::path test_dir(const fs::path& results) { return results / "data" / "test"; }
fs::path synthetic_root(const fs::path& results) { return results / "synthetic"; }

data::LabeledDataset cmd_import_deap(const fs::path& source, const fs::path& output, const std::string& target,
                                     const data::DeapLayout& layout) {
  auto d = data::import_deap(source, target, layout);
  data::save_dataset(d, output);
  return d;
}

data::LabeledDataset cmd_import_sadt(const fs::path& source, const fs::path& output, const data::SadtLayout& layout) {
  auto d = data::import_sadt(source, layout);
  data::save_dataset(d, output);
  return d;
}

void to_json(nlohmann::json& j, const TrainDiffusionConfig& c) {
  j = nlohmann::json{{"dataset", c.dataset.string()}, {"output", c.output.string()},
                     {"split_ratios", c.split_ratios}, {"split_seed", c.split_seed},
                     {"model", c.model},           {"schedule", c.schedule},
                     {"training", c.training},     {"resume", c.resume},
                     {"log_every", c.log_every}};
}

void from_json(const nlohmann::json& j, TrainDiffusionConfig& c) {
  static const std::set<std::string> known{"dataset", "output", "split_ratios", "split_seed", "model",
                                           "schedule", "training", "resume", "log_every"};
  if (!j.is_object()) throw ArgumentError("training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ArgumentError("unknown config key '" + key + "'");
  }
  try {
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("split_ratios")) c.split_ratios = j.at("split_ratios").get<std::array<double, 3>>();
    if (j.contains("split_seed")) c.split_seed = j.at("split_seed").get<std::uint64_t>();
    if (j.contains("model")) c.model = j.at("model").get<model::DenoiserConfig>();
    if (j.contains("schedule")) c.schedule = j.at("schedule").get<diffusion::ScheduleConfig>();
    if (j.contains("training")) c.training = j.at("training").get<model::TrainOptions>();
    if (j.contains("resume")) c.resume = j.at("resume").get<bool>();
    if (j.contains("log_every")) c.log_every = j.at("log_every").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("bad training config: ") + e.what());
  }
}

TrainSummary cmd_train_diffusion(const TrainDiffusionConfig& config, const Logger& log) {
  if (config.output.empty()) throw ArgumentError("no checkpoint directory given");
  auto prepared = prepare_dataset(load_input(config.dataset), config.split_ratios, config.split_seed);
  for (const auto& w : prepared.warnings) say(log, "warning: " + w);
  const model::GridShape grid{prepared.pool.channels(), prepared.pool.timesteps()};

  model::Checkpoint ck;
  if (config.resume) {
    ck = load_input_checkpoint(config.output);
    if (!(ck.model.grid() == grid)) throw DataError("checkpoint grid does not match the dataset");
    ck.options.steps = config.training.steps;
  } else {
    config.model.validate();
    torch::manual_seed(mix_seed(config.training.seed, 0x1417ULL));
    ck.model = model::build_denoiser(config.model, grid);
    ck.schedule = config.schedule;
    ck.options = config.training;
    ck.step = 0;
  }
  ck.options.checkpoint_dir = config.output;
  fs::create_directories(config.output);
  write_json(split_json(prepared), config.output / "split.json");

  TrainSummary summary;
  summary.start_step = ck.step;
  summary.loss_csv = config.output / "loss.csv";
  say(log, "training from step " + std::to_string(ck.step) + " to " + std::to_string(ck.options.steps) + " on " +
               std::to_string(prepared.pool.size()) + " epochs");
  const auto schedule = ck.schedule.build();
  auto curve = model::train_denoiser(ck, prepared.pool.epochs, schedule, [&](const model::LossPoint& p) {
    if (config.log_every > 0 && p.step % config.log_every == 0) {
      say(log, "step " + std::to_string(p.step) + " loss " + std::to_string(p.loss));
    }
  });
  model::save_checkpoint(ck, config.output);
  model::write_loss_curve(curve, summary.loss_csv, config.resume && fs::exists(summary.loss_csv));
  summary.end_step = ck.step;
  summary.final_loss = curve.empty() ? 0.0 : curve.back().loss;
  return summary;
}

data::LabeledDataset cmd_generate(const GenerateConfig& config, const Logger& log) {
  if (!(config.percent > 0)) throw ArgumentError("percent must be positive");
  if (config.delta < 0) throw ArgumentError("delta must be >= 0");
  auto ck = load_input_checkpoint(config.checkpoint);
  auto prepared = prepare_dataset(load_input(config.dataset), config.split_ratios, config.split_seed);
  const int steps = config.inference_steps > 0 ? config.inference_steps : ck.schedule.inference_steps;
  const auto count = synthetic_count(prepared.pool.size(), config.percent);
  say(log, "generating " + std::to_string(count) + " epochs with " + std::to_string(steps) + " steps");
  auto out = generate_synthetic(ck.model, ck.schedule.build(), prepared.pool, count, config.delta, config.seed, steps,
                                config.batch);
  if (!config.output.empty()) data::save_dataset(out, config.output);
  return out;
}

Report cmd_mix_experiment(const ExperimentConfig& config, const Logger& log) {
  auto ws = open_workspace(config, log);
  ResultsStore store(config.output_dir);
  std::map<fs::path, model::Checkpoint> loaded;
  for (double delta : config.deltas) {
    const auto ck_path = config.checkpoint_for(delta);
    if (ck_path.empty()) throw ArgumentError("no checkpoint configured for delta " + format_delta(delta));
    if (!loaded.count(ck_path)) loaded.emplace(ck_path, load_input_checkpoint(ck_path));
    const auto& ck = loaded.at(ck_path);
    const int steps = config.inference_steps > 0 ? config.inference_steps : ck.schedule.inference_steps;
    const auto schedule = ck.schedule.build();
    const auto& pool = ws.data.pool;

    AugmentationSource source = [&, delta, steps](std::int64_t count, std::uint64_t seed) {
      const auto dir = synthetic_root(config.output_dir) / ("delta=" + format_delta(delta) + "_seed=" + std::to_string(seed));
      const nlohmann::json meta{{"checkpoint", fs::absolute(ck_path).lexically_normal().string()},
                                {"delta", delta},
                                {"seed", seed},
                                {"inference_steps", steps}};
      if (fs::exists(dir / "generation.json") && fs::exists(dir / "manifest.json") &&
          read_json(dir / "generation.json") == meta) {
        auto cached = data::load_dataset(dir);
        if (cached.size() >= count) {
          say(log, "reusing " + dir.string());
          return prefix(cached, count);
        }
      }
      say(log, "generating " + std::to_string(count) + " epochs at delta " + format_delta(delta));
      auto synth = generate_synthetic(ck.model, schedule, pool, count, delta, seed, steps, config.generation_batch);
      data::save_dataset(synth, dir);
      write_json(meta, dir / "generation.json");
      return synth;
    };

    SweepPlan plan{config.target_name, ws.classifiers, config.seeds, config.folds, Condition::Synthetic,
                   delta, config.mix_percents, source};
    auto stats = run_sweep(store, ws.data.pool, ws.data.test, plan, log);
    say(log, "delta " + format_delta(delta) + ": " + log_summary(stats));
  }
  return cmd_report(config.output_dir).report;
}

Report cmd_noise_control(const ExperimentConfig& config, const Logger& log) {
  auto ws = open_workspace(config, log);
  ResultsStore store(config.output_dir);
  const auto& pool = ws.data.pool;
  AugmentationSource source = [&](std::int64_t count, std::uint64_t seed) {
    return make_noise_control(pool, count, seed);
  };
  SweepPlan plan{config.target_name, ws.classifiers, config.seeds, config.folds, Condition::Noise,
                 0.0, config.mix_percents, source};
  auto stats = run_sweep(store, ws.data.pool, ws.data.test, plan, log);
  say(log, "noise control: " + log_summary(stats));
  return cmd_report(config.output_dir).report;
}

ReportOutput cmd_report(const fs::path& results, Metric metric) {
  ReportOutput out;
  out.report.metric = metric;
  const auto records = read_runs(results / "runs.csv");
  if (records.empty()) {
    out.text = "no runs\n";
    return out;
  }
  out.report = build_report(records, metric);
  out.text = render_tables(out.report);
  std::ofstream md(results / "report.md");
  if (!md) throw RunError("cannot write " + (results / "report.md").string());
  md << out.text;
  write_report_csv(out.report, results / "report.csv");
  write_summary_json(out.report, results / "summary.json");
  return out;
}

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "tsne") return PlotKind::Tsne;
  if (name == "overlay") return PlotKind::Overlay;
  if (name == "sweep") return PlotKind::Sweep;
  throw ArgumentError("unknown plot kind '" + name + "' (tsne, overlay, sweep)");
}

namespace {

std::vector<fs::path> synthetic_inputs(const fs::path& results, const PlotOptions& o) {
  if (!o.synthetic.empty()) return o.synthetic;
  std::vector<fs::path> dirs;
  const auto root = synthetic_root(results);
  if (fs::is_directory(root)) {
    for (const auto& e : fs::directory_iterator(root)) {
      if (fs::exists(e.path() / "manifest.json")) dirs.push_back(e.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw DataError("no synthetic sets under " + root.string());
  return dirs;
}

std::string set_title(const fs::path& dir) {
  if (fs::exists(dir / "generation.json")) {
    auto meta = read_json(dir / "generation.json");
    if (meta.contains("delta")) return "delta " + format_delta(meta.at("delta").get<double>());
  }
  return dir.filename().string();
}

torch::Tensor sample_rows(const data::LabeledDataset& d, std::int64_t n, std::uint64_t seed) {
  Rng rng(seed);
  auto idx = torch::randperm(d.size(), rng.generator(), torch::TensorOptions().dtype(torch::kLong)).slice(0, 0, n);
  return d.epochs.index_select(0, idx).reshape({n, -1});
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::vector<fs::path> cmd_plot(const fs::path& results, PlotKind kind, const PlotOptions& o) {
  const fs::path out_dir = o.output.empty() ? results / "plots" : o.output;
  std::vector<fs::path> written;
  if (kind == PlotKind::Sweep) {
    const auto records = read_runs(results / "runs.csv");
    if (records.empty()) throw DataError("no runs under " + results.string());
    const auto report = build_report(records);
    std::map<std::string, std::vector<const ReportCell*>> by_classifier;
    for (const auto& c : report.cells) by_classifier[c.classifier].push_back(&c);
    for (const auto& [classifier, cells] : by_classifier) {
      Figure fig;
      fig.title = classifier + ": accuracy vs synthetic share (delta " + format_delta(o.delta) + ")";
      fig.x_label = "synthetic epochs (% of real)";
      fig.y_label = report.metric == Metric::Balanced ? "balanced accuracy (%)" : "accuracy (%)";
      std::map<std::string, std::vector<std::pair<int, double>>> curves;
      std::map<std::string, double> baselines;
      for (const auto* c : cells) {
        if (c->is_baseline()) baselines[c->target] = c->mean;
        else if (c->condition == Condition::Synthetic && format_delta(c->delta) == format_delta(o.delta)) {
          curves[c->target].emplace_back(c->mix_percent, c->mean);
        }
      }
      if (curves.empty()) continue;
      int color = 0;
      for (auto& [target, points] : curves) {
        std::sort(points.begin(), points.end());
        const char* col = kPalette[color++ % std::size(kPalette)];
        Series s{target, col, {}, {}, SeriesStyle::LineMarkers};
        for (auto [m, v] : points) {
          s.x.push_back(m);
          s.y.push_back(v);
        }
        const double lo = s.x.front(), hi = s.x.back();
        fig.series.push_back(std::move(s));
        if (baselines.count(target)) {
          fig.series.push_back({target + " baseline", col, {lo, hi}, {baselines[target], baselines[target]},
                                SeriesStyle::Dotted});
        }
      }
      const auto file = out_dir / ("sweep_" + classifier + ".svg");
      write_svg(fig, file);
      written.push_back(file);
    }
    if (written.empty()) throw DataError("no synthetic cells at delta " + format_delta(o.delta));
    return written;
  }

  const fs::path real_path = o.real.empty() ? pool_dir(results) : o.real;
  const auto real = load_input(real_path);
  for (const auto& dir : synthetic_inputs(results, o)) {
    const auto synth = load_input(dir);
    if (synth.channels() != real.channels() || synth.timesteps() != real.timesteps()) {
      throw DataError(dir.string() + " does not match the real epoch shape");
    }
    Figure fig;
    if (kind == PlotKind::Tsne) {
      const auto n = std::min<std::int64_t>({o.samples, real.size(), synth.size()});
      if (n < 2) throw DataError("t-SNE needs at least two epochs per set");
      auto points = torch::cat({sample_rows(real, n, mix_seed(o.seed, 0)), sample_rows(synth, n, mix_seed(o.seed, 1))});
      TsneParams params;
      params.seed = o.seed;
      params.iterations = o.tsne_iterations;
      params.exaggeration_iterations = std::min(params.exaggeration_iterations, o.tsne_iterations);
      const auto y = tsne_embed(points, params);
      fig.title = "t-SNE, real vs synthetic (" + set_title(dir) + ")";
      fig.x_label = "t-SNE 1";
      fig.y_label = "t-SNE 2";
      Series r{"real", "#1f77b4", {}, {}, SeriesStyle::Points};
      Series s{"synthetic", "#d62728", {}, {}, SeriesStyle::Points};
      for (std::int64_t i = 0; i < 2 * n; ++i) {
        auto& target = i < n ? r : s;
        target.x.push_back(y[static_cast<std::size_t>(i)][0]);
        target.y.push_back(y[static_cast<std::size_t>(i)][1]);
      }
      fig.series = {r, s};
      const auto file = out_dir / ("tsne_" + dir.filename().string() + ".svg");
      write_svg(fig, file);
      written.push_back(file);
    } else {
      if (synth.conditions.empty()) throw DataError(dir.string() + " has no conditioning indices");
      if (o.epoch < 0 || o.epoch >= synth.size()) throw ArgumentError("epoch index out of range");
      if (o.channel < 0 || o.channel >= real.channels()) throw ArgumentError("channel index out of range");
      const auto row = static_cast<std::int64_t>(synth.conditions[static_cast<std::size_t>(o.epoch)]);
      if (row >= real.size()) throw DataError("conditioning index outside the real set");
      Series r{"real", "#1f77b4", {}, {}, SeriesStyle::Line};
      Series s{"synthetic", "#d62728", {}, {}, SeriesStyle::Line};
      auto rt = real.epochs[row][o.channel].contiguous();
      auto st = synth.epochs[o.epoch][o.channel].contiguous();
      for (std::int64_t t = 0; t < real.timesteps(); ++t) {
        const double sec = t / real.sample_rate;
        r.x.push_back(sec);
        r.y.push_back(rt[t].item<double>());
        s.x.push_back(sec);
        s.y.push_back(st[t].item<double>());
      }
      const auto ch = real.channel_names.empty() ? std::to_string(o.channel) : real.channel_names[o.channel];
      fig.title = "real vs synthetic, " + ch + " (" + set_title(dir) + ")";
      fig.x_label = "time (s)";
      fig.y_label = "amplitude (normalized)";
      fig.series = {r, s};
      const auto file = out_dir / ("overlay_" + dir.filename().string() + ".svg");
      write_svg(fig, file);
      written.push_back(file);
    }
  }
  return written;
}

}  // namespace eegdiff::experiment
