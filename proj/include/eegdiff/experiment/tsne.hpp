#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace eegdiff::experiment {

struct TsneParams {
  double perplexity = 30;
  int iterations = 1000;
  int exaggeration_iterations = 250;
  double exaggeration = 12;
  double learning_rate = 0;  // 0: N / (4 * exaggeration)
  int pca_dims = 50;  // 0 skips the PCA step
  std::uint64_t seed = 0;
};

// Exact (O(N^2)) t-SNE of the rows of `points` (N, D) into the plane.
// Perplexity is capped at (N - 1) / 3.
std::vector<std::array<double, 2>> tsne_embed(const torch::Tensor& points, const TsneParams& params = {});

// Per-point conditional distributions for a target perplexity; row i of the
// result sums to 1 and has entropy log(perplexity). Exposed for testing.
std::vector<double> conditional_affinities(const std::vector<double>& sq_distances, std::int64_t n,
                                           double perplexity);

}  // namespace eegdiff::experiment
