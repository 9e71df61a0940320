#include "eegdiff/classify/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/core/rng.hpp"

namespace eegdiff::classify {

const char* to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::SvmRbf: return "svm_rbf";
    case ClassifierKind::EEGNet: return "eegnet";
    case ClassifierKind::TSception: return "tsception";
  }
  return "unknown";
}

ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "svm_rbf" || name == "svm") return ClassifierKind::SvmRbf;
  if (name == "eegnet") return ClassifierKind::EEGNet;
  if (name == "tsception") return ClassifierKind::TSception;
  throw ArgumentError("unknown classifier kind '" + name + "'");
}

void ClassifierSpec::validate() const {
  if (kind != ClassifierKind::SvmRbf) {
    if (epochs < 1) throw ArgumentError("training epochs must be positive");
    if (batch_size < 1) throw ArgumentError("batch size must be positive");
    if (!(learning_rate > 0)) throw ArgumentError("learning rate must be positive");
  }
  if (!(svm.c > 0)) throw ArgumentError("SVM C must be positive");
  if (!(eegnet.dropout >= 0 && eegnet.dropout < 1) || !(tsception.dropout >= 0 && tsception.dropout < 1)) {
    throw ArgumentError("dropout must lie in [0, 1)");
  }
}

namespace {

template <typename F>
void read_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, F&& assign) {
  if (!j.is_object()) throw ArgumentError("hyperparameters must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ArgumentError("unknown hyperparameter '" + key + "'");
    }
    assign(key, value);
  }
}

}  // namespace

void to_json(nlohmann::json& j, const ClassifierSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)},
                     {"epochs", s.epochs},
                     {"batch_size", s.batch_size},
                     {"learning_rate", s.learning_rate}};
  switch (s.kind) {
    case ClassifierKind::SvmRbf:
      j["hyperparameters"] = {{"C", s.svm.c}, {"gamma", s.svm.gamma > 0 ? nlohmann::json(s.svm.gamma) : "scale"},
                              {"tolerance", s.svm.tolerance}};
      break;
    case ClassifierKind::EEGNet:
      j["hyperparameters"] = {{"F1", s.eegnet.f1},
                              {"D", s.eegnet.depth_multiplier},
                              {"F2", s.eegnet.f2},
                              {"kernel_length", s.eegnet.kernel_length},
                              {"dropout", s.eegnet.dropout}};
      break;
    case ClassifierKind::TSception:
      j["hyperparameters"] = {{"num_T", s.tsception.num_t},       {"num_S", s.tsception.num_s},
                              {"hidden", s.tsception.hidden},     {"dropout", s.tsception.dropout},
                              {"windows", s.tsception.window_fractions}, {"pool", s.tsception.pool}};
      break;
  }
}

void from_json(const nlohmann::json& j, ClassifierSpec& s) {
  s = ClassifierSpec{};
  s.kind = parse_classifier_kind(j.at("kind").get<std::string>());
  s.epochs = j.value("epochs", s.epochs);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  const auto hp = j.value("hyperparameters", nlohmann::json::object());
  switch (s.kind) {
    case ClassifierKind::SvmRbf:
      read_keys(hp, {"C", "gamma", "tolerance"}, [&](const std::string& k, const nlohmann::json& v) {
        if (k == "C") s.svm.c = v.get<double>();
        if (k == "tolerance") s.svm.tolerance = v.get<double>();
        if (k == "gamma") {
          if (v.is_string()) {
            if (v.get<std::string>() != "scale") throw ArgumentError("SVM gamma must be a number or \"scale\"");
            s.svm.gamma = 0;
          } else {
            s.svm.gamma = v.get<double>();
            if (!(s.svm.gamma > 0)) throw ArgumentError("SVM gamma must be positive");
          }
        }
      });
      break;
    case ClassifierKind::EEGNet:
      read_keys(hp, {"F1", "D", "F2", "kernel_length", "dropout"}, [&](const std::string& k, const nlohmann::json& v) {
        if (k == "F1") s.eegnet.f1 = v.get<int>();
        if (k == "D") s.eegnet.depth_multiplier = v.get<int>();
        if (k == "F2") s.eegnet.f2 = v.get<int>();
        if (k == "kernel_length") s.eegnet.kernel_length = v.get<int>();
        if (k == "dropout") s.eegnet.dropout = v.get<double>();
      });
      break;
    case ClassifierKind::TSception:
      read_keys(hp, {"num_T", "num_S", "hidden", "dropout", "windows", "pool"},
                [&](const std::string& k, const nlohmann::json& v) {
                  if (k == "num_T") s.tsception.num_t = v.get<int>();
                  if (k == "num_S") s.tsception.num_s = v.get<int>();
                  if (k == "hidden") s.tsception.hidden = v.get<int>();
                  if (k == "dropout") s.tsception.dropout = v.get<double>();
                  if (k == "windows") s.tsception.window_fractions = v.get<std::vector<double>>();
                  if (k == "pool") s.tsception.pool = v.get<int>();
                });
      break;
  }
  s.validate();
}

void SvmClassifier::fit(const data::LabeledDataset& train, const data::LabeledDataset*, std::uint64_t) {
  auto x = train.epochs.flatten(1);
  standardizer_.fit(x);
  svm_.fit(standardizer_.transform(x), train.labels);
}

std::vector<std::uint8_t> SvmClassifier::predict(const torch::Tensor& epochs) {
  return svm_.predict(standardizer_.transform(epochs.flatten(1)));
}

namespace {

using Snapshot = std::vector<std::pair<std::string, torch::Tensor>>;

Snapshot snapshot(torch::nn::Module& m) {
  Snapshot s;
  for (const auto& p : m.named_parameters()) s.emplace_back(p.key(), p.value().detach().clone());
  for (const auto& b : m.named_buffers()) s.emplace_back(b.key(), b.value().detach().clone());
  return s;
}

void restore(torch::nn::Module& m, const Snapshot& s) {
  torch::NoGradGuard no_grad;
  auto params = m.named_parameters();
  auto buffers = m.named_buffers();
  for (const auto& [name, value] : s) {
    if (auto* p = params.find(name)) p->copy_(value);
    else if (auto* b = buffers.find(name)) b->copy_(value);
  }
}

}  // namespace

torch::Tensor DeepClassifier::scores(const torch::Tensor& epochs) {
  torch::NoGradGuard no_grad;
  module_->eval();
  std::vector<torch::Tensor> parts;
  const auto x = epochs.to(torch::kFloat);
  for (std::int64_t start = 0; start < x.size(0); start += 256) {
    parts.push_back(net_.forward(x.slice(0, start, std::min(start + 256, x.size(0)))));
  }
  return parts.empty() ? torch::zeros({0, 2}) : torch::cat(parts, 0);
}

std::vector<std::uint8_t> DeepClassifier::predict(const torch::Tensor& epochs) {
  auto pred = scores(epochs).argmax(1);
  auto acc = pred.accessor<std::int64_t, 1>();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(pred.size(0)));
  for (std::int64_t i = 0; i < pred.size(0); ++i) out[i] = static_cast<std::uint8_t>(acc[i]);
  return out;
}

void DeepClassifier::fit(const data::LabeledDataset& train, const data::LabeledDataset* validation,
                         std::uint64_t seed) {
  const std::int64_t n = train.size();
  if (n == 0) throw DataError("cannot train on an empty set");
  Rng rng(mix_seed(seed, 0));
  torch::manual_seed(mix_seed(seed, 1));
  torch::optim::Adam optimizer(module_->parameters(), torch::optim::AdamOptions(spec_.learning_rate));
  const auto x = train.epochs.to(torch::kFloat);
  const auto y = torch::tensor(std::vector<std::int64_t>(train.labels.begin(), train.labels.end()), torch::kLong);

  losses_.clear();
  double best = -1;
  Snapshot best_state;
  for (int epoch = 0; epoch < spec_.epochs; ++epoch) {
    module_->train();
    auto perm = torch::randperm(n, rng.generator(), torch::TensorOptions().dtype(torch::kLong));
    double total = 0;
    for (std::int64_t start = 0; start < n; start += spec_.batch_size) {
      auto idx = perm.slice(0, start, std::min(start + spec_.batch_size, n));
      // A lone trailing item would break batch statistics.
      if (idx.size(0) < 2 && n >= 2) continue;
      optimizer.zero_grad();
      auto loss = torch::nn::functional::cross_entropy(net_.forward(x.index_select(0, idx)), y.index_select(0, idx));
      const double value = loss.item<double>();
      if (!std::isfinite(value)) throw RunError("classifier training diverged (non-finite loss)");
      loss.backward();
      optimizer.step();
      total += value * static_cast<double>(idx.size(0));
    }
    losses_.push_back(total / static_cast<double>(n));
    if (validation && validation->size() > 0) {
      const double acc = accuracy(validation->labels, predict(validation->epochs));
      if (acc > best) {
        best = acc;
        best_state = snapshot(*module_);
      }
    }
  }
  if (!best_state.empty()) restore(*module_, best_state);
  module_->eval();
}

std::unique_ptr<Classifier> build_classifier(const ClassifierSpec& spec, const EpochShape& shape) {
  spec.validate();
  switch (spec.kind) {
    case ClassifierKind::SvmRbf:
      return std::make_unique<SvmClassifier>(spec.svm);
    case ClassifierKind::EEGNet: {
      EEGNet net(shape.channels, shape.samples, shape.sample_rate, spec.eegnet);
      return std::make_unique<DeepClassifier>(torch::nn::AnyModule(net), net.ptr(), spec);
    }
    case ClassifierKind::TSception: {
      TSception net(shape.channels, shape.samples, shape.sample_rate, spec.tsception);
      return std::make_unique<DeepClassifier>(torch::nn::AnyModule(net), net.ptr(), spec);
    }
  }
  throw ArgumentError("unknown classifier kind");
}

EvalResult train_and_eval(const ClassifierSpec& spec, const data::LabeledDataset& train,
                          const data::LabeledDataset& test, std::uint64_t seed,
                          const data::LabeledDataset* validation) {
  if (train.size() == 0 || test.size() == 0) throw DataError("train and test sets must be non-empty");
  if (train.channels() != test.channels() || train.timesteps() != test.timesteps()) {
    throw DataError("train and test epochs differ in shape");
  }
  // Weight initialisation draws from the global generator.
  torch::manual_seed(mix_seed(seed, 2));
  auto model = build_classifier(spec, {train.channels(), train.timesteps(), train.sample_rate});
  model->fit(train, validation, seed);
  const auto predicted = model->predict(test.epochs);
  return {accuracy(test.labels, predicted), balanced_accuracy(test.labels, predicted)};
}

std::vector<int> stratified_folds(const std::vector<std::uint8_t>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("cross-validation needs k >= 2");
  std::vector<std::int64_t> members[2];
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i] ? 1 : 0].push_back(static_cast<std::int64_t>(i));
  for (const auto& m : members) {
    if (static_cast<int>(m.size()) < k) {
      throw DataError("a class has fewer than " + std::to_string(k) + " epochs; every fold needs both classes");
    }
  }
  std::vector<int> fold(labels.size(), -1);
  Rng rng(seed);
  int next = 0;
  for (auto& m : members) {
    auto perm = torch::randperm(static_cast<std::int64_t>(m.size()), rng.generator(),
                                torch::TensorOptions().dtype(torch::kLong));
    auto p = perm.accessor<std::int64_t, 1>();
    // Continue the deal where the previous class stopped so fold sizes stay even.
    for (std::int64_t i = 0; i < perm.size(0); ++i) {
      fold[static_cast<std::size_t>(m[static_cast<std::size_t>(p[i])])] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

data::LabeledDataset fold_training_set(const data::LabeledDataset& pool, const std::vector<int>& fold, int f,
                                       const data::LabeledDataset* augmentation) {
  if (fold.size() != static_cast<std::size_t>(pool.size())) throw ArgumentError("fold ids do not cover the pool");
  std::vector<std::int64_t> train_idx;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    if (fold[i] != f) train_idx.push_back(static_cast<std::int64_t>(i));
  }
  auto train = pool.subset(train_idx);
  if (!augmentation || augmentation->size() == 0) return train;
  std::vector<std::int64_t> admitted;
  for (std::int64_t i = 0; i < augmentation->size(); ++i) {
    if (augmentation->conditions.empty()) {
      admitted.push_back(i);
      continue;
    }
    const auto c = augmentation->conditions[static_cast<std::size_t>(i)];
    if (c >= fold.size()) throw DataError("augmentation condition index outside the pool");
    if (fold[c] != f) admitted.push_back(i);
  }
  return admitted.empty() ? train : data::concat(train, augmentation->subset(admitted));
}

CrossvalResult crossval_evaluate(const ClassifierSpec& spec, const data::LabeledDataset& pool,
                                 const data::LabeledDataset& test, int k, std::uint64_t seed,
                                 const data::LabeledDataset* augmentation) {
  pool.validate();
  const auto fold = stratified_folds(pool.labels, k, seed);
  std::vector<double> balanced, plain;
  for (int f = 0; f < k; ++f) {
    std::vector<std::int64_t> val_idx;
    for (std::size_t i = 0; i < fold.size(); ++i) {
      if (fold[i] == f) val_idx.push_back(static_cast<std::int64_t>(i));
    }
    const auto train = fold_training_set(pool, fold, f, augmentation);
    const auto val = pool.subset(val_idx);
    const auto result = train_and_eval(spec, train, test, mix_seed(seed, static_cast<std::uint64_t>(f) + 100), &val);
    balanced.push_back(result.balanced_accuracy);
    plain.push_back(result.accuracy);
  }
  return {summarize_folds(balanced), summarize_folds(plain)};
}

}  // namespace eegdiff::classify
