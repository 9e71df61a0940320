#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/core/rng.hpp"
#include "eegdiff/data/dataset.hpp"
#include "eegdiff/data/importers.hpp"
#include "eegdiff/data/npy.hpp"
#include "eegdiff/data/preprocess.hpp"
#include "temp_dir.hpp"

using namespace eegdiff;
using namespace eegdiff::data;
using eegdiff::testing::TempDir;
namespace fs = std::filesystem;

namespace {

LabeledDataset toy_dataset(std::int64_t n, std::int64_t c, std::int64_t l, int subjects, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset d;
  d.epochs = rng.normal({n, c, l}) * 3.0 + 1.5;
  for (std::int64_t i = 0; i < n; ++i) {
    d.labels.push_back(static_cast<std::uint8_t>(rng.uniform_int(0, 1)));
    d.subjects.push_back(static_cast<std::uint16_t>(i % subjects + 1));
    d.provenance.push_back(Provenance::Real);
  }
  d.target_name = "valence";
  d.channel_names = default_channel_names(c);
  return d;
}

void write_deap_fixture(const fs::path& dir, const std::vector<int>& subjects, int trials, int channels,
                        const std::vector<std::array<double, 4>>& ratings, double rate = 128.0) {
  fs::create_directories(dir);
  std::ofstream(dir / "info.json") << nlohmann::json{{"sample_rate", rate}, {"subjects", subjects}}.dump();
  for (int s : subjects) {
    // Sample value encodes (subject, trial, channel, time) so windows can be traced back.
    auto t = torch::arange(63 * 128, torch::kDouble).reshape({1, 1, -1});
    auto ch = torch::arange(channels, torch::kDouble).reshape({1, -1, 1}) * 1e4;
    auto tr = torch::arange(trials, torch::kDouble).reshape({-1, 1, 1}) * 1e6;
    auto eeg = (t + ch + tr + s * 1e8).to(torch::kDouble);
    char name[32];
    std::snprintf(name, sizeof name, "s%02d.npy", s);
    write_npy(eeg, dir / name);
    auto r = torch::empty({trials, 4}, torch::kDouble);
    for (int i = 0; i < trials; ++i)
      for (int k = 0; k < 4; ++k) r[i][k] = ratings[static_cast<std::size_t>(i) % ratings.size()][k];
    std::snprintf(name, sizeof name, "s%02d_labels.npy", s);
    write_npy(r, dir / name);
  }
}

}  // namespace

TEST(Npy, RoundTripPreservesDtypeShapeAndValues) {
  TempDir tmp;
  for (auto dtype : {torch::kFloat, torch::kDouble, torch::kByte, torch::kShort, torch::kInt, torch::kLong}) {
    auto a = (torch::randn({3, 4, 5}) * 100).to(dtype);
    write_npy(a, tmp / "a.npy");
    auto b = read_npy(tmp / "a.npy");
    EXPECT_EQ(b.scalar_type(), dtype);
    EXPECT_TRUE(torch::equal(a, b));
  }
  auto v = torch::arange(7, torch::kInt);
  write_npy(v, tmp / "v.npy");
  EXPECT_TRUE(torch::equal(read_npy(tmp / "v.npy"), v));
}

TEST(Npy, ReadsHandWrittenFile) {
  TempDir tmp;
  // A version-1 header exactly as NumPy lays it out, padded to 128 bytes.
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (2,), }";
  header.append(128 - 10 - header.size() - 1, ' ');
  header += '\n';
  std::ofstream out(tmp / "h.npy", std::ios::binary);
  out.write("\x93NUMPY\x01\x00", 8);
  const char len[2] = {static_cast<char>(header.size()), 0};
  out.write(len, 2);
  out << header;
  const double values[2] = {1.5, -2.25};
  out.write(reinterpret_cast<const char*>(values), sizeof values);
  out.close();
  auto t = read_npy(tmp / "h.npy");
  ASSERT_EQ(t.sizes(), torch::IntArrayRef({2}));
  EXPECT_EQ(t[0].item<double>(), 1.5);
  EXPECT_EQ(t[1].item<double>(), -2.25);
}

TEST(Npy, RejectsGarbageAndTruncation) {
  TempDir tmp;
  std::ofstream(tmp / "bad.npy") << "not numpy";
  EXPECT_THROW(read_npy(tmp / "bad.npy"), DataError);
  write_npy(torch::zeros({100}), tmp / "t.npy");
  fs::resize_file(tmp / "t.npy", fs::file_size(tmp / "t.npy") - 8);
  EXPECT_THROW(read_npy(tmp / "t.npy"), DataError);
  EXPECT_THROW(read_npy(tmp / "missing.npy"), DataError);
}

TEST(Binarize, ThresholdRule) {
  EXPECT_EQ(binarize_rating(7.3), 1);
  EXPECT_EQ(binarize_rating(2.0), 0);
  EXPECT_EQ(binarize_rating(5.0), 0);
  EXPECT_EQ(binarize_rating(std::nextafter(5.0, 6.0)), 1);
}

TEST(ImportDeap, EpochingLabelsAndCounts) {
  TempDir tmp;
  // valence, arousal, dominance, liking
  write_deap_fixture(tmp.path(), {1, 2, 3}, 3, 33, {{7.3, 2.0, 5.0, 9.0}, {2.0, 7.3, 5.0, 1.0}, {5.0, 5.0, 6.0, 4.0}});
  DeapLayout layout;
  layout.trials = 3;
  auto d = import_deap(tmp.path(), "valence", layout);
  EXPECT_EQ(d.size(), 3 * 3 * 60);
  EXPECT_EQ(d.channels(), 32);
  EXPECT_EQ(d.timesteps(), 128);
  EXPECT_EQ(d.target_name, "valence");
  // Trial labels repeat across the 60 windows.
  for (int s = 0; s < 3; ++s) {
    for (int w = 0; w < 60; ++w) {
      EXPECT_EQ(d.labels[s * 180 + w], 1);
      EXPECT_EQ(d.labels[s * 180 + 60 + w], 0);
      EXPECT_EQ(d.labels[s * 180 + 120 + w], 0);
    }
  }
  EXPECT_EQ(d.subjects.front(), 1);
  EXPECT_EQ(d.subjects.back(), 3);
  // Window w of trial tr starts at sample 3*128 + w*128; value encodes its origin.
  auto e = d.epochs.to(torch::kDouble);
  const double subject2_trial1_w5_ch7_t9 = 2e8 + 1e6 + 7e4 + (384 + 5 * 128 + 9);
  EXPECT_EQ(e[180 + 60 + 5][7][9].item<double>(), static_cast<float>(subject2_trial1_w5_ch7_t9));
  // The 33rd channel (index 32) is dropped.
  EXPECT_LT(e.remainder(1e6).max().item<double>(), 32e4);

  auto arousal = import_deap(tmp.path(), "arousal", layout);
  EXPECT_EQ(arousal.labels[0], 0);
  EXPECT_EQ(arousal.labels[60], 1);
  auto liking = import_deap(tmp.path(), "liking", layout);
  EXPECT_EQ(liking.labels[0], 1);
  EXPECT_EQ(liking.labels[120], 0);
}

TEST(ImportDeap, CountConservationProperty) {
  for (int subjects : {1, 2, 4}) {
    for (int trials : {1, 2}) {
      TempDir tmp;
      std::vector<int> ids;
      for (int s = 1; s <= subjects; ++s) ids.push_back(s);
      write_deap_fixture(tmp.path(), ids, trials, 32, {{6, 6, 6, 6}});
      DeapLayout layout;
      layout.trials = trials;
      EXPECT_EQ(import_deap(tmp.path(), "dominance", layout).size(), subjects * trials * layout.trial_seconds);
    }
  }
  // Full-size arithmetic: 32 subjects x 40 trials x 60 windows.
  EXPECT_EQ(32 * DeapLayout{}.trials * DeapLayout{}.trial_seconds, 76800);
}

TEST(ImportDeap, Errors) {
  TempDir tmp;
  write_deap_fixture(tmp.path(), {1, 2}, 1, 32, {{6, 6, 6, 6}});
  DeapLayout layout;
  layout.trials = 1;
  fs::remove(tmp / "s02.npy");
  EXPECT_THROW(import_deap(tmp.path(), "valence", layout), DataError);

  TempDir rate;
  write_deap_fixture(rate.path(), {1}, 1, 32, {{6, 6, 6, 6}}, 512.0);
  EXPECT_THROW(import_deap(rate.path(), "valence", layout), DataError);

  TempDir ratings;
  write_deap_fixture(ratings.path(), {1}, 1, 32, {{0.2, 6, 6, 6}});
  EXPECT_THROW(import_deap(ratings.path(), "valence", layout), DataError);

  TempDir ok;
  write_deap_fixture(ok.path(), {1}, 1, 32, {{6, 6, 6, 6}});
  EXPECT_THROW(import_deap(ok.path(), "vigilance", layout), ArgumentError);
  DeapLayout forty;
  EXPECT_THROW(import_deap(ok.path(), "valence", forty), DataError);

  TempDir narrow;
  write_deap_fixture(narrow.path(), {1}, 1, 20, {{6, 6, 6, 6}});
  EXPECT_THROW(import_deap(narrow.path(), "valence", layout), DataError);
}

TEST(ImportSadt, PaddingAndLabels) {
  TempDir tmp;
  const std::int64_t n = 2022;
  auto eeg = torch::randn({n, 30, 128});
  auto labels = torch::randint(0, 2, {n}, torch::kLong);
  auto subjects = torch::arange(n, torch::kLong).remainder(11) + 1;
  write_npy(eeg, tmp / "eeg.npy");
  write_npy(labels, tmp / "labels.npy");
  write_npy(subjects.to(torch::kInt), tmp / "subjects.npy");
  auto d = import_sadt(tmp.path());
  ASSERT_EQ(d.size(), n);
  EXPECT_EQ(d.channels(), 32);
  EXPECT_EQ(d.timesteps(), 128);
  EXPECT_EQ(d.target_name, "vigilance");
  EXPECT_TRUE(torch::equal(d.epochs.slice(1, 0, 30), eeg));
  EXPECT_TRUE(torch::equal(d.epochs.select(1, 30), eeg.select(1, 28)));
  EXPECT_TRUE(torch::equal(d.epochs.select(1, 31), eeg.select(1, 29)));
  for (std::int64_t i = 0; i < n; ++i) {
    ASSERT_EQ(d.labels[i], labels[i].item<std::int64_t>());
    ASSERT_EQ(d.subjects[i], subjects[i].item<std::int64_t>());
  }
  EXPECT_EQ(d.unique_subjects().size(), 11u);
}

TEST(ImportSadt, LongerEpochsAreCroppedAndWrongChannelsRejected) {
  TempDir tmp;
  auto eeg = torch::randn({4, 30, 384});
  write_npy(eeg, tmp / "eeg.npy");
  write_npy(torch::tensor({0, 1, 0, 1}, torch::kLong), tmp / "labels.npy");
  write_npy(torch::tensor({1, 1, 2, 2}, torch::kLong), tmp / "subjects.npy");
  auto d = import_sadt(tmp.path());
  EXPECT_TRUE(torch::equal(d.epochs.slice(1, 0, 30), eeg.slice(2, 0, 128)));

  write_npy(torch::randn({4, 28, 128}), tmp / "eeg.npy");
  EXPECT_THROW(import_sadt(tmp.path()), DataError);
  write_npy(torch::randn({4, 30, 128}), tmp / "eeg.npy");
  write_npy(torch::tensor({0, 1, 2, 1}, torch::kLong), tmp / "labels.npy");
  EXPECT_THROW(import_sadt(tmp.path()), DataError);
}

TEST(Normalize, TrainSplitMomentsRecomputed) {
  auto d = toy_dataset(60, 4, 32, 6, 3);
  const std::vector<std::uint16_t> train{1, 2, 3, 4};
  auto result = normalize(d, train);
  EXPECT_TRUE(result.warnings.empty());
  auto rows = result.dataset.indices_of_subjects(train);
  auto x = result.dataset.epochs.index_select(0, torch::tensor(rows)).to(torch::kDouble);
  for (int c = 0; c < 4; ++c) {
    auto ch = x.select(1, c);
    EXPECT_GT(ch.mean().item<double>(), -1e-6);
    EXPECT_LT(ch.mean().item<double>(), 1e-6);
    const double var = ch.var(false).item<double>();
    EXPECT_GT(var, 0.999);
    EXPECT_LT(var, 1.001);
  }
  // Held-out subjects use the train statistics.
  const auto& s = result.dataset.normalization;
  auto raw = d.epochs[5][2][7].item<double>();
  EXPECT_NEAR(result.dataset.epochs[5][2][7].item<double>(), (raw - s.mean[2]) / s.stdev[2], 1e-5);
}

TEST(Normalize, ConstantChannelBecomesZeroWithWarning) {
  auto d = toy_dataset(10, 3, 16, 2, 4);
  d.epochs.select(1, 1).fill_(4.0);
  auto result = normalize(d, std::vector<std::uint16_t>{1, 2});
  ASSERT_EQ(result.warnings.size(), 1u);
  EXPECT_EQ(result.dataset.normalization.stdev[1], 1.0);
  EXPECT_EQ(result.dataset.epochs.select(1, 1).abs().max().item<float>(), 0.0f);
}

TEST(Normalize, SecondApplicationRejected) {
  auto d = toy_dataset(10, 2, 8, 2, 5);
  auto once = normalize(d, std::vector<std::uint16_t>{1}).dataset;
  EXPECT_THROW(normalize(once, std::vector<std::uint16_t>{1}), DataError);
  EXPECT_THROW(apply_normalization(once, once.normalization), DataError);
  auto held = apply_normalization(d, once.normalization);
  EXPECT_TRUE(torch::equal(held.epochs, once.epochs));
  EXPECT_THROW(normalize(d, std::vector<std::uint16_t>{99}), DataError);
}

TEST(SplitCounts, LargestRemainderOracle) {
  EXPECT_EQ(split_counts(32, {0.7, 0.15, 0.15}), (std::array<int, 3>{22, 5, 5}));
  EXPECT_EQ(split_counts(11, {0.7, 0.15, 0.15}), (std::array<int, 3>{8, 2, 1}));
  EXPECT_EQ(split_counts(3, {0.7, 0.15, 0.15}), (std::array<int, 3>{1, 1, 1}));
  EXPECT_EQ(split_counts(4, {0.7, 0.15, 0.15}), (std::array<int, 3>{2, 1, 1}));
  EXPECT_THROW(split_counts(2, {0.7, 0.15, 0.15}), DataError);
  EXPECT_THROW(split_counts(10, {0.7, 0.2, 0.2}), ArgumentError);
}

TEST(SplitCounts, SumAndMinimumProperty) {
  for (int n = 3; n <= 200; ++n) {
    auto c = split_counts(n, {0.7, 0.15, 0.15});
    ASSERT_EQ(c[0] + c[1] + c[2], n);
    for (int k : c) ASSERT_GE(k, 1);
    // Each count stays within one of its exact share unless it had to borrow.
    if (n >= 7) ASSERT_LE(std::abs(c[0] - 0.7 * n), 1.0);
  }
}

TEST(Split, NoLeakageAndFullCoverage) {
  for (int subjects = 3; subjects <= 40; ++subjects) {
    auto d = toy_dataset(subjects * 3, 1, 4, subjects, static_cast<std::uint64_t>(subjects));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto split = split_subject_independent(d, {0.7, 0.15, 0.15}, seed);
      std::set<std::uint16_t> all;
      for (const auto* part : {&split.train, &split.val, &split.test}) {
        ASSERT_FALSE(part->empty());
        for (auto id : *part) ASSERT_TRUE(all.insert(id).second) << "subject " << id << " in two splits";
      }
      ASSERT_EQ(all.size(), static_cast<std::size_t>(subjects));
      auto counts = split_counts(subjects, {0.7, 0.15, 0.15});
      ASSERT_EQ(split.train.size(), static_cast<std::size_t>(counts[0]));
    }
  }
}

TEST(Split, DeterministicAndSeedDependent) {
  auto d = toy_dataset(320, 1, 4, 32, 8);
  auto a = split_subject_independent(d, {0.7, 0.15, 0.15}, 11);
  auto b = split_subject_independent(d, {0.7, 0.15, 0.15}, 11);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  bool differs = false;
  for (std::uint64_t s = 12; s < 20 && !differs; ++s) {
    differs = split_subject_independent(d, {0.7, 0.15, 0.15}, s).test != a.test;
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(split_subject_independent(toy_dataset(4, 1, 4, 2, 1)), DataError);
}

TEST(Split, StratificationImprovesBalanceOverFirstShuffle) {
  // Half the subjects are all-positive, half all-negative.
  auto d = toy_dataset(200, 1, 4, 20, 2);
  for (std::size_t i = 0; i < d.labels.size(); ++i) d.labels[i] = d.subjects[i] % 2;
  auto split = split_subject_independent(d, {0.7, 0.15, 0.15}, 0);
  auto rate = [&](const std::vector<std::uint16_t>& ids) {
    double p = 0;
    for (auto id : ids) p += id % 2;
    return p / static_cast<double>(ids.size());
  };
  EXPECT_NEAR(rate(split.val), 0.5, 0.2);
  EXPECT_NEAR(rate(split.test), 0.5, 0.2);
}

TEST(DatasetIo, RoundTripIsBitwise) {
  TempDir tmp;
  auto d = toy_dataset(10, 3, 16, 2, 9);
  d.provenance[3] = Provenance::Synthetic;
  d.normalization = {true, {0.1, 0.2, 0.3}, {1.0, 2.0, 3.0}};
  save_dataset(d, tmp / "ds");
  auto back = load_dataset(tmp / "ds");
  EXPECT_TRUE(torch::equal(back.epochs, d.epochs));
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.subjects, d.subjects);
  EXPECT_EQ(back.provenance, d.provenance);
  EXPECT_EQ(back.target_name, d.target_name);
  EXPECT_EQ(back.sample_rate, d.sample_rate);
  EXPECT_EQ(back.channel_names, d.channel_names);
  EXPECT_EQ(back.normalization.mean, d.normalization.mean);
  EXPECT_EQ(back.normalization.stdev, d.normalization.stdev);
  EXPECT_TRUE(back.conditions.empty());

  d.conditions = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  save_dataset(d, tmp / "ds2");
  EXPECT_EQ(load_dataset(tmp / "ds2").conditions, d.conditions);
}

TEST(DatasetIo, CorruptedPayloadFailsChecksum) {
  TempDir tmp;
  save_dataset(toy_dataset(10, 2, 8, 2, 10), tmp.path());
  {
    std::fstream f(tmp / "epochs.f32le", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(17);
    f.put('\x7f');
  }
  EXPECT_THROW(load_dataset(tmp.path()), DataError);
}

TEST(DatasetIo, ShapeMismatchRejected) {
  TempDir tmp;
  save_dataset(toy_dataset(10, 32, 64, 2, 11), tmp.path());
  nlohmann::json m;
  std::ifstream(tmp / "manifest.json") >> m;
  m["shape"] = {32, 128};
  std::ofstream(tmp / "manifest.json") << m.dump();
  EXPECT_THROW(load_dataset(tmp.path()), DataError);
  EXPECT_THROW(load_dataset(tmp / "nowhere"), DataError);
}

TEST(DatasetValidate, Invariants) {
  auto d = toy_dataset(5, 2, 4, 1, 12);
  EXPECT_NO_THROW(d.validate());
  auto bad = d;
  bad.labels[0] = 2;
  EXPECT_THROW(bad.validate(), DataError);
  bad = d;
  bad.subjects.pop_back();
  EXPECT_THROW(bad.validate(), DataError);
  bad = d;
  bad.target_name = "mood";
  EXPECT_THROW(bad.validate(), DataError);
  auto both = concat(d, d);
  EXPECT_EQ(both.size(), 10);
  EXPECT_THROW(concat(d, toy_dataset(2, 3, 4, 1, 1)), DataError);
}
