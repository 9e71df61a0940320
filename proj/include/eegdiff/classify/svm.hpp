#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <torch/torch.h>

namespace eegdiff::classify {

struct SvmParams {
  double c = 1.0;
  // Kernel width; <= 0 selects "scale", i.e. 1 / (features * variance of the training matrix).
  double gamma = 0.0;
  double tolerance = 1e-3;
  std::int64_t max_iterations = 0;  // 0 = max(10^7, 100 n)
};

// Per-feature z-score learned on the training matrix.
class Standardizer {
 public:
  void fit(const torch::Tensor& x);
  torch::Tensor transform(const torch::Tensor& x) const;

 private:
  torch::Tensor mean_, scale_;
};

// Binary C-SVM with an RBF kernel trained by sequential minimal optimisation
// (second-order working-set selection).
class RbfSvm {
 public:
  explicit RbfSvm(SvmParams params = {});

  // x: (N, F) features, labels 0/1.
  void fit(const torch::Tensor& x, std::span<const std::uint8_t> labels);
  torch::Tensor decision_function(const torch::Tensor& x) const;
  std::vector<std::uint8_t> predict(const torch::Tensor& x) const;

  double gamma() const { return gamma_; }
  double bias() const { return -rho_; }
  std::int64_t support_vector_count() const { return support_.size(0); }
  std::int64_t iterations() const { return iterations_; }
  // Dual coefficients y_i * alpha_i of the support vectors.
  const torch::Tensor& dual_coefficients() const { return coef_; }

 private:
  torch::Tensor kernel(const torch::Tensor& a, const torch::Tensor& b) const;

  SvmParams params_;
  double gamma_ = 0;
  double rho_ = 0;
  std::int64_t iterations_ = 0;
  torch::Tensor support_;  // (S, F)
  torch::Tensor coef_;     // (S)
};

}  // namespace eegdiff::classify
