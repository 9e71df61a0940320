#include "eegdiff/data/importers.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/data/npy.hpp"

namespace eegdiff::data {
namespace fs = std::filesystem;

std::uint8_t binarize_rating(double rating, double threshold) { return rating > threshold ? 1 : 0; }

namespace {

int deap_rating_column(const std::string& target) {
  if (target == "valence") return 0;
  if (target == "arousal") return 1;
  if (target == "dominance") return 2;
  if (target == "liking") return 3;
  throw ArgumentError("DEAP has no '" + target + "' rating");
}

fs::path subject_file(const fs::path& dir, int subject, const char* suffix) {
  char name[32];
  std::snprintf(name, sizeof name, "s%02d%s.npy", subject, suffix);
  return dir / name;
}

}  // namespace

LabeledDataset import_deap(const fs::path& source, const std::string& target_name, const DeapLayout& layout) {
  const int column = deap_rating_column(target_name);
  std::ifstream info_in(source / "info.json");
  if (!info_in) throw DataError("no info.json in " + source.string());
  nlohmann::json info;
  std::vector<int> subject_ids;
  double rate = 0;
  try {
    info_in >> info;
    rate = info.at("sample_rate").get<double>();
    subject_ids = info.at("subjects").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed info.json: " + std::string(e.what()));
  }
  if (rate != layout.sample_rate) {
    throw DataError("expected " + std::to_string(layout.sample_rate) + " Hz, source is " + std::to_string(rate) + " Hz");
  }
  if (subject_ids.empty()) throw DataError("info.json lists no subjects");

  const auto epoch_len = static_cast<std::int64_t>(std::llround(layout.sample_rate));
  const auto offset = static_cast<std::int64_t>(std::llround(layout.baseline_seconds * layout.sample_rate));
  const std::int64_t needed = offset + layout.trial_seconds * epoch_len;

  std::vector<torch::Tensor> parts;
  LabeledDataset out;
  for (int id : subject_ids) {
    if (id < 0 || id > UINT16_MAX) throw DataError("subject id out of range: " + std::to_string(id));
    const auto eeg_path = subject_file(source, id, "");
    const auto label_path = subject_file(source, id, "_labels");
    if (!fs::exists(eeg_path) || !fs::exists(label_path)) {
      throw DataError("missing subject " + std::to_string(id) + " in " + source.string());
    }
    auto eeg = read_npy(eeg_path).to(torch::kFloat);
    auto ratings = read_npy(label_path).to(torch::kDouble);
    if (eeg.dim() != 3 || eeg.size(1) < layout.channels_kept || eeg.size(2) < needed) {
      throw DataError(eeg_path.string() + " must be (trials, >=" + std::to_string(layout.channels_kept) +
                      ", >=" + std::to_string(needed) + ")");
    }
    const auto trials = eeg.size(0);
    if (layout.trials > 0 && trials != layout.trials) {
      throw DataError(eeg_path.string() + " has " + std::to_string(trials) + " trials, expected " +
                      std::to_string(layout.trials));
    }
    if (ratings.dim() != 2 || ratings.size(0) != trials || ratings.size(1) != 4) {
      throw DataError(label_path.string() + " must be (trials, 4)");
    }
    auto r = ratings.accessor<double, 2>();
    // Keep the channels, drop the baseline, then split each trial into one-second windows.
    auto kept = eeg.slice(1, 0, layout.channels_kept).slice(2, offset, needed);
    auto epochs = kept.reshape({trials, layout.channels_kept, layout.trial_seconds, epoch_len})
                      .permute({0, 2, 1, 3})
                      .reshape({trials * layout.trial_seconds, layout.channels_kept, epoch_len});
    parts.push_back(epochs);
    for (std::int64_t trial = 0; trial < trials; ++trial) {
      const double rating = r[trial][column];
      if (!std::isfinite(rating) || rating < 1.0 || rating > 9.0) {
        throw DataError("malformed rating " + std::to_string(rating) + " for subject " + std::to_string(id));
      }
      const auto label = binarize_rating(rating, layout.label_threshold);
      for (int s = 0; s < layout.trial_seconds; ++s) {
        out.labels.push_back(label);
        out.subjects.push_back(static_cast<std::uint16_t>(id));
        out.provenance.push_back(Provenance::Real);
      }
    }
  }
  out.epochs = torch::cat(parts, 0).contiguous();
  out.target_name = target_name;
  out.sample_rate = layout.sample_rate;
  out.channel_names = default_channel_names(layout.channels_kept);
  out.validate();
  return out;
}

LabeledDataset import_sadt(const fs::path& source, const SadtLayout& layout) {
  for (const char* f : {"eeg.npy", "labels.npy", "subjects.npy"}) {
    if (!fs::exists(source / f)) throw DataError("missing " + std::string(f) + " in " + source.string());
  }
  auto eeg = read_npy(source / "eeg.npy").to(torch::kFloat);
  auto labels = read_npy(source / "labels.npy").to(torch::kLong).flatten();
  auto subjects = read_npy(source / "subjects.npy").to(torch::kLong).flatten();
  if (eeg.dim() != 3) throw DataError("eeg.npy must be (epochs, channels, samples)");
  if (eeg.size(1) != layout.source_channels) {
    throw DataError("expected " + std::to_string(layout.source_channels) + " channels, found " +
                    std::to_string(eeg.size(1)));
  }
  if (eeg.size(2) < layout.epoch_length) throw DataError("epochs shorter than " + std::to_string(layout.epoch_length));
  const auto n = eeg.size(0);
  if (labels.size(0) != n || subjects.size(0) != n) throw DataError("labels/subjects length differs from eeg");

  const int extra = layout.output_channels - layout.source_channels;
  if (extra < 0 || extra > layout.source_channels) throw ArgumentError("invalid SADT channel layout");
  auto body = eeg.slice(2, 0, layout.epoch_length);
  auto pad = body.slice(1, layout.source_channels - extra, layout.source_channels);

  LabeledDataset out;
  out.epochs = torch::cat({body, pad}, 1).contiguous();
  auto l = labels.accessor<std::int64_t, 1>();
  auto s = subjects.accessor<std::int64_t, 1>();
  for (std::int64_t i = 0; i < n; ++i) {
    if (l[i] != 0 && l[i] != 1) throw DataError("labels must be 0 (alert) or 1 (drowsy)");
    if (s[i] < 0 || s[i] > UINT16_MAX) throw DataError("subject id out of range");
    out.labels.push_back(static_cast<std::uint8_t>(l[i]));
    out.subjects.push_back(static_cast<std::uint16_t>(s[i]));
    out.provenance.push_back(Provenance::Real);
  }
  out.target_name = "vigilance";
  out.sample_rate = layout.sample_rate;
  out.channel_names = default_channel_names(layout.output_channels);
  out.validate();
  return out;
}

}  // namespace eegdiff::data
