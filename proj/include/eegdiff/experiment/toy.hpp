#pragma once

#include <cstdint>

#include "eegdiff/data/dataset.hpp"

namespace eegdiff::experiment {

// Two-class sinusoid corpus: every channel of a class-c epoch is a sine at
// frequency[c] Hz with a random phase, plus white noise. Train and test epochs
// come from disjoint subject ids (train 1.., test 100..).
struct ToyCorpusSpec {
  int channels = 2;
  int samples = 64;
  double sample_rate = 64.0;
  int train = 400;
  int test = 100;
  int train_subjects = 8;
  int test_subjects = 2;
  double frequency[2] = {4.0, 6.0};
  double amplitude = 1.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

struct ToyCorpus {
  data::LabeledDataset train;
  data::LabeledDataset test;
};

ToyCorpus make_toy_corpus(const ToyCorpusSpec& spec);

}  // namespace eegdiff::experiment
