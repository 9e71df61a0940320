#include "eegdiff/classify/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "eegdiff/core/errors.hpp"

namespace eegdiff::classify {

void Standardizer::fit(const torch::Tensor& x) {
  if (x.dim() != 2 || x.size(0) == 0) throw ArgumentError("standardizer expects a non-empty (N, F) matrix");
  auto xd = x.to(torch::kDouble);
  mean_ = xd.mean(0);
  auto sd = xd.std(0, /*unbiased=*/false);
  scale_ = torch::where(sd > 0, sd, torch::ones_like(sd));
}

torch::Tensor Standardizer::transform(const torch::Tensor& x) const {
  if (!mean_.defined()) throw RunError("standardizer used before fit");
  return (x.to(torch::kDouble) - mean_) / scale_;
}

namespace {

constexpr double kTau = 1e-12;
constexpr std::size_t kCacheBytes = std::size_t{256} << 20;

// Kernel rows, either precomputed in full or held in an LRU cache.
class KernelRows {
 public:
  KernelRows(const torch::Tensor& x, double gamma) : x_(x), gamma_(gamma), n_(x.size(0)) {
    sq_ = (x_ * x_).sum(1);
    const auto row_bytes = static_cast<std::size_t>(n_) * sizeof(double);
    capacity_ = std::max<std::size_t>(2, kCacheBytes / row_bytes);
    if (static_cast<std::size_t>(n_) <= capacity_) {
      full_ = compute(torch::arange(n_, torch::kLong)).contiguous();
    }
  }

  const double* row(std::int64_t i) {
    if (full_.defined()) return full_.data_ptr<double>() + i * n_;
    auto it = cache_.find(i);
    if (it != cache_.end()) {
      order_.splice(order_.begin(), order_, it->second.second);
      return it->second.first.data_ptr<double>();
    }
    if (cache_.size() >= capacity_) {
      cache_.erase(order_.back());
      order_.pop_back();
    }
    order_.push_front(i);
    auto r = compute(torch::tensor({i}, torch::kLong)).reshape({n_}).contiguous();
    auto& slot = cache_[i];
    slot = {r, order_.begin()};
    return slot.first.data_ptr<double>();
  }

 private:
  torch::Tensor compute(const torch::Tensor& rows) const {
    auto a = x_.index_select(0, rows);
    auto d2 = sq_.index_select(0, rows).unsqueeze(1) + sq_.unsqueeze(0) - 2 * torch::mm(a, x_.t());
    return torch::exp(-gamma_ * d2.clamp_min(0));
  }

  torch::Tensor x_, sq_, full_;
  double gamma_;
  std::int64_t n_;
  std::size_t capacity_;
  std::list<std::int64_t> order_;
  std::unordered_map<std::int64_t, std::pair<torch::Tensor, std::list<std::int64_t>::iterator>> cache_;
};

}  // namespace

RbfSvm::RbfSvm(SvmParams params) : params_(params) {
  if (!(params_.c > 0)) throw ArgumentError("SVM C must be positive");
  if (!(params_.tolerance > 0)) throw ArgumentError("SVM tolerance must be positive");
}

torch::Tensor RbfSvm::kernel(const torch::Tensor& a, const torch::Tensor& b) const {
  auto d2 = (a * a).sum(1).unsqueeze(1) + (b * b).sum(1).unsqueeze(0) - 2 * torch::mm(a, b.t());
  return torch::exp(-gamma_ * d2.clamp_min(0));
}

void RbfSvm::fit(const torch::Tensor& features, std::span<const std::uint8_t> labels) {
  if (features.dim() != 2 || features.size(0) != static_cast<std::int64_t>(labels.size())) {
    throw ArgumentError("SVM expects (N, F) features with one label per row");
  }
  const std::int64_t n = features.size(0);
  auto x = features.to(torch::kDouble).contiguous();
  if (!torch::isfinite(x).all().item<bool>()) throw RunError("SVM features contain non-finite values");
  std::vector<double> y(static_cast<std::size_t>(n));
  bool seen[2] = {false, false};
  for (std::int64_t i = 0; i < n; ++i) {
    y[i] = labels[i] ? 1.0 : -1.0;
    seen[labels[i] ? 1 : 0] = true;
  }
  if (!seen[0] || !seen[1]) throw DataError("SVM training data must contain both classes");

  if (params_.gamma > 0) {
    gamma_ = params_.gamma;
  } else {
    const double var = x.var(/*unbiased=*/false).item<double>();
    gamma_ = var > 0 ? 1.0 / (static_cast<double>(x.size(1)) * var) : 1.0;
  }

  KernelRows k(x, gamma_);
  const double c = params_.c;
  const double eps = params_.tolerance;
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0), grad(static_cast<std::size_t>(n), -1.0);
  auto upper = [&](std::int64_t t) { return alpha[t] >= c; };
  auto lower = [&](std::int64_t t) { return alpha[t] <= 0; };
  const std::int64_t max_iter =
      params_.max_iterations > 0 ? params_.max_iterations : std::max<std::int64_t>(10'000'000, 100 * n);

  iterations_ = 0;
  while (iterations_ < max_iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::int64_t i = -1;
    for (std::int64_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!upper(t) && -grad[t] >= gmax) gmax = -grad[t], i = t;
      } else {
        if (!lower(t) && grad[t] >= gmax) gmax = grad[t], i = t;
      }
    }
    if (i < 0) break;
    const double* ki = k.row(i);
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::int64_t j = -1;
    for (std::int64_t t = 0; t < n; ++t) {
      double diff;
      if (y[t] > 0) {
        if (lower(t)) continue;
        diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
      } else {
        if (upper(t)) continue;
        diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
      }
      if (diff > 0) {
        double quad = 2.0 - 2.0 * ki[t];
        if (quad <= 0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj <= best) best = obj, j = t;
      }
    }
    if (gmax + gmax2 < eps || j < 0) break;
    ++iterations_;

    const double* kj = k.row(j);
    ki = k.row(i);
    const double qij = y[i] * y[j] * ki[j];
    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2.0 + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) alpha[j] = 0, alpha[i] = diff;
      } else {
        if (alpha[i] < 0) alpha[i] = 0, alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) alpha[i] = c, alpha[j] = c - diff;
      } else {
        if (alpha[j] > c) alpha[j] = c, alpha[i] = c + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) alpha[i] = c, alpha[j] = sum - c;
      } else {
        if (alpha[j] < 0) alpha[j] = 0, alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) alpha[j] = c, alpha[i] = sum - c;
      } else {
        if (alpha[i] < 0) alpha[i] = 0, alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::int64_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
    }
  }

  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0;
  int free = 0;
  for (std::int64_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  rho_ = free > 0 ? sum_free / free : (ub + lb) / 2;

  std::vector<std::int64_t> sv;
  std::vector<double> coef;
  for (std::int64_t t = 0; t < n; ++t) {
    if (alpha[t] > 0) {
      sv.push_back(t);
      coef.push_back(y[t] * alpha[t]);
    }
  }
  support_ = x.index_select(0, torch::tensor(sv, torch::kLong));
  coef_ = torch::tensor(coef, torch::kDouble);
}

torch::Tensor RbfSvm::decision_function(const torch::Tensor& x) const {
  if (!support_.defined()) throw RunError("SVM used before fit");
  auto xd = x.to(torch::kDouble);
  if (xd.dim() != 2 || xd.size(1) != support_.size(1)) throw ArgumentError("SVM feature width mismatch");
  if (support_.size(0) == 0) return torch::full({xd.size(0)}, -rho_, torch::kDouble);
  return torch::mv(kernel(xd, support_), coef_) - rho_;
}

std::vector<std::uint8_t> RbfSvm::predict(const torch::Tensor& x) const {
  auto d = decision_function(x);
  auto acc = d.accessor<double, 1>();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(d.size(0)));
  for (std::int64_t i = 0; i < d.size(0); ++i) out[i] = acc[i] > 0 ? 1 : 0;
  return out;
}

}  // namespace eegdiff::classify
