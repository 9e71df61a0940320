#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "eegdiff/classify/metrics.hpp"
#include "eegdiff/classify/networks.hpp"
#include "eegdiff/classify/svm.hpp"
#include "eegdiff/data/dataset.hpp"

namespace eegdiff::classify {

enum class ClassifierKind { SvmRbf, EEGNet, TSception };

const char* to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(const std::string& name);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::EEGNet;
  // Deep kinds only.
  int epochs = 100;
  int batch_size = 16;
  double learning_rate = 1e-4;
  SvmParams svm;
  EegNetParams eegnet;
  TsceptionParams tsception;

  void validate() const;
};

// {"kind": "eegnet", "epochs": 100, ..., "hyperparameters": {...}}; unknown
// hyperparameter keys are rejected.
void to_json(nlohmann::json& j, const ClassifierSpec& s);
void from_json(const nlohmann::json& j, ClassifierSpec& s);

struct EpochShape {
  std::int64_t channels;
  std::int64_t samples;
  double sample_rate;
};

// A trainable binary classifier over (N, channels, samples) epochs.
class Classifier {
 public:
  virtual ~Classifier() = default;
  // Fits on `train`; deep kinds keep the epoch with the best accuracy on
  // `validation` when it is given, otherwise the final epoch.
  virtual void fit(const data::LabeledDataset& train, const data::LabeledDataset* validation,
                   std::uint64_t seed) = 0;
  virtual std::vector<std::uint8_t> predict(const torch::Tensor& epochs) = 0;
  // Number of per-epoch class scores (2 for every kind).
  virtual int output_width() const { return 2; }
};

class SvmClassifier : public Classifier {
 public:
  explicit SvmClassifier(SvmParams params) : svm_(params) {}
  void fit(const data::LabeledDataset& train, const data::LabeledDataset* validation, std::uint64_t seed) override;
  std::vector<std::uint8_t> predict(const torch::Tensor& epochs) override;
  const RbfSvm& svm() const { return svm_; }

 private:
  Standardizer standardizer_;
  RbfSvm svm_;
};

class DeepClassifier : public Classifier {
 public:
  DeepClassifier(torch::nn::AnyModule net, std::shared_ptr<torch::nn::Module> module, const ClassifierSpec& spec)
      : net_(std::move(net)), module_(std::move(module)), spec_(spec) {}
  void fit(const data::LabeledDataset& train, const data::LabeledDataset* validation, std::uint64_t seed) override;
  std::vector<std::uint8_t> predict(const torch::Tensor& epochs) override;
  // Raw class scores (N, 2) in evaluation mode.
  torch::Tensor scores(const torch::Tensor& epochs);
  torch::nn::Module& module() { return *module_; }
  // Training loss per epoch of the last fit.
  const std::vector<double>& loss_history() const { return losses_; }

 private:
  torch::nn::AnyModule net_;
  std::shared_ptr<torch::nn::Module> module_;
  ClassifierSpec spec_;
  std::vector<double> losses_;
};

std::unique_ptr<Classifier> build_classifier(const ClassifierSpec& spec, const EpochShape& shape);

// Fits on train (optionally selecting on validation) and scores on test.
EvalResult train_and_eval(const ClassifierSpec& spec, const data::LabeledDataset& train,
                          const data::LabeledDataset& test, std::uint64_t seed,
                          const data::LabeledDataset* validation = nullptr);

// Stratified fold ids for binary labels: each class is shuffled by seed and
// dealt round-robin, so every fold's class counts are within one of the
// global share. Throws DataError when a class has fewer than k members.
std::vector<int> stratified_folds(const std::vector<std::uint8_t>& labels, int k, std::uint64_t seed);

// Training set of fold f: pool rows outside fold f plus admitted
// augmentation rows (see crossval_evaluate).
data::LabeledDataset fold_training_set(const data::LabeledDataset& pool, const std::vector<int>& fold, int f,
                                       const data::LabeledDataset* augmentation);

struct CrossvalResult {
  FoldReport balanced;  // primary metric
  FoldReport plain;     // plain accuracy, for comparison
};

// k-fold CV over `pool` (real train+val epochs). Fold f trains on the other
// folds plus the rows of `augmentation` admitted for it, selects on fold f,
// and is scored on the untouched `test` set. Augmentation rows that carry a
// conditioning index are admitted only when that pool epoch is in the
// training folds; rows without one are admitted in every fold.
CrossvalResult crossval_evaluate(const ClassifierSpec& spec, const data::LabeledDataset& pool,
                                 const data::LabeledDataset& test, int k, std::uint64_t seed,
                                 const data::LabeledDataset* augmentation = nullptr);

}  // namespace eegdiff::classify
