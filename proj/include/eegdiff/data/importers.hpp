#pragma once

#include <filesystem>
#include <string>

#include "eegdiff/data/dataset.hpp"

namespace eegdiff::data {

struct DeapLayout {
  int channels_kept = 32;
  double sample_rate = 128.0;
  double baseline_seconds = 3.0;
  int trial_seconds = 60;
  int trials = 40;
  double label_threshold = 5.0;  // rating > threshold -> high (1)
};

// Rating binarisation: strictly above the threshold is high.
std::uint8_t binarize_rating(double rating, double threshold = 5.0);

// Reads a DEAP-style directory:
//   info.json            {"sample_rate": 128, "subjects": [1, 2, ...]}
//   sNN.npy              (trials, channels >= 32, samples) preprocessed EEG
//   sNN_labels.npy       (trials, 4) ratings in DEAP order
//                        valence, arousal, dominance, liking
// and cuts every trial into one-second epochs after the pre-trial baseline.
LabeledDataset import_deap(const std::filesystem::path& source, const std::string& target_name,
                           const DeapLayout& layout = {});

struct SadtLayout {
  int source_channels = 30;
  int output_channels = 32;
  std::int64_t epoch_length = 128;
  double sample_rate = 128.0;
};

// Reads an SADT-style directory:
//   eeg.npy       (N, 30, samples >= epoch_length)
//   labels.npy    (N) 0 = alert, 1 = drowsy
//   subjects.npy  (N) subject ids
// Pads to 32 channels by repeating the last two source channels and keeps
// the first epoch_length samples of each epoch.
LabeledDataset import_sadt(const std::filesystem::path& source, const SadtLayout& layout = {});

}  // namespace eegdiff::data
