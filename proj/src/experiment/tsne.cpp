#include "eegdiff/experiment/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/core/rng.hpp"

namespace eegdiff::experiment {

std::vector<double> conditional_affinities(const std::vector<double>& d2, std::int64_t n, double perplexity) {
  const double target = std::log(perplexity);
  std::vector<double> p(static_cast<std::size_t>(n * n), 0.0);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double* di = d2.data() + i * n;
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double dmin = std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, di[j]);
    }
    for (int iter = 0; iter < 200; ++iter) {
      // Shifted by the nearest distance for stability; entropy is unaffected.
      double sum = 0, weighted = 0;
      for (std::int64_t j = 0; j < n; ++j) {
        if (j == i) {
          row[j] = 0;
          continue;
        }
        row[j] = std::exp(-beta * (di[j] - dmin));
        sum += row[j];
        weighted += row[j] * (di[j] - dmin);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      for (std::int64_t j = 0; j < n; ++j) row[j] /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2 : (beta + hi) / 2;
      } else {
        hi = beta;
        beta = (beta + lo) / 2;
      }
    }
    std::copy(row.begin(), row.end(), p.begin() + i * n);
  }
  return p;
}

std::vector<std::array<double, 2>> tsne_embed(const torch::Tensor& points, const TsneParams& params) {
  if (points.dim() != 2) throw ArgumentError("t-SNE expects an (N, D) matrix");
  const auto n = points.size(0);
  if (n < 2) throw ArgumentError("t-SNE needs at least two points");
  if (params.perplexity <= 0 || params.iterations < 1 || params.learning_rate < 0 || params.exaggeration <= 0) {
    throw ArgumentError("invalid t-SNE parameters");
  }
  auto x = points.to(torch::kDouble);
  x = x - x.mean(0, true);
  if (params.pca_dims > 0 && x.size(1) > params.pca_dims) {
    auto svd = torch::linalg_svd(x, false);
    auto v = std::get<2>(svd).slice(0, 0, params.pca_dims);
    x = x.matmul(v.t());
  }
  x = x.contiguous();
  auto sq = (x * x).sum(1);
  auto dist = (sq.unsqueeze(1) + sq.unsqueeze(0) - 2 * x.matmul(x.t())).clamp_min(0).contiguous();
  std::vector<double> d2(dist.data_ptr<double>(), dist.data_ptr<double>() + n * n);

  const double perplexity = std::min(params.perplexity, std::max(1.0, (n - 1) / 3.0));
  auto cond = conditional_affinities(d2, n, perplexity);
  std::vector<double> p(static_cast<std::size_t>(n * n));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      p[i * n + j] = std::max((cond[i * n + j] + cond[j * n + i]) / (2.0 * n), 1e-12);
    }
  }

  const double lr = params.learning_rate > 0 ? params.learning_rate
                                            : static_cast<double>(n) / (4 * std::max(1.0, params.exaggeration));
  Rng rng(params.seed);
  auto init = rng.normal({n, 2}, torch::kDouble) * 1e-4;
  std::vector<double> y(init.data_ptr<double>(), init.data_ptr<double>() + n * 2);
  std::vector<double> update(y.size(), 0.0), gains(y.size(), 1.0), grad(y.size());
  std::vector<double> num(static_cast<std::size_t>(n * n));

  for (int it = 0; it < params.iterations; ++it) {
    const bool early = it < params.exaggeration_iterations;
    const double ex = early ? params.exaggeration : 1.0;
    const double momentum = early ? 0.5 : 0.8;
    double qsum = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      num[i * n + i] = 0;
      for (std::int64_t j = i + 1; j < n; ++j) {
        const double dx = y[2 * i] - y[2 * j], dy = y[2 * i + 1] - y[2 * j + 1];
        const double v = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i * n + j] = num[j * n + i] = v;
        qsum += 2 * v;
      }
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double v = num[i * n + j];
        const double w = (ex * p[i * n + j] - v / qsum) * v;
        grad[2 * i] += 4 * w * (y[2 * i] - y[2 * j]);
        grad[2 * i + 1] += 4 * w * (y[2 * i + 1] - y[2 * j + 1]);
      }
    }
    for (std::size_t k = 0; k < y.size(); ++k) {
      const bool same_sign = (grad[k] > 0) == (update[k] > 0);
      gains[k] = same_sign ? std::max(gains[k] * 0.8, 0.01) : gains[k] + 0.2;
      update[k] = momentum * update[k] - lr * gains[k] * grad[k];
      y[k] += update[k];
    }
    double mx = 0, my = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      mx += y[2 * i];
      my += y[2 * i + 1];
    }
    mx /= n;
    my /= n;
    for (std::int64_t i = 0; i < n; ++i) {
      y[2 * i] -= mx;
      y[2 * i + 1] -= my;
    }
  }
  std::vector<std::array<double, 2>> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out[i] = {y[2 * i], y[2 * i + 1]};
  return out;
}

}  // namespace eegdiff::experiment
