#include <gtest/gtest.h>

#include <cmath>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/diffusion/process.hpp"

using namespace eegdiff;
using namespace eegdiff::diffusion;

namespace {

const auto kDouble = torch::TensorOptions().dtype(torch::kDouble);

torch::Tensor scalar_epoch(double v) { return torch::full({1, 1}, v, kDouble); }

// Noise predictor that returns a fixed value everywhere.
NoisePredictor constant_predictor(double value) {
  return [value](const torch::Tensor&, const torch::Tensor& y, const torch::Tensor&) {
    return torch::full_like(y, value);
  };
}

// Returns the exact noise that would have produced y_t from `target`.
NoisePredictor oracle_predictor(torch::Tensor target) {
  return [target](const torch::Tensor&, const torch::Tensor& y, const torch::Tensor& g) {
    auto gamma = g.reshape({-1, 1, 1});
    return (y - torch::sqrt(gamma) * target) / torch::sqrt(1 - gamma);
  };
}

}  // namespace

TEST(ForwardMarginal, Endpoints) {
  auto y0 = torch::randn({3, 5}, kDouble);
  auto eps = torch::randn({3, 5}, kDouble);
  EXPECT_TRUE(torch::equal(forward_marginal(y0, 1.0, eps), y0));
  EXPECT_TRUE(torch::equal(forward_marginal(y0, 0.0, eps), eps));
}

TEST(ForwardMarginal, ScalarArithmetic) {
  auto out = forward_marginal(scalar_epoch(2.0), 0.25, scalar_epoch(1.0));
  EXPECT_NEAR(out.item<double>(), 1.8660254, 1e-6);
}

TEST(ForwardMarginal, Errors) {
  EXPECT_THROW(forward_marginal(torch::zeros({2, 3}), 0.5, torch::zeros({3, 2})), ArgumentError);
  EXPECT_THROW(forward_marginal(torch::zeros({2, 3}), 1.5, torch::zeros({2, 3})), ArgumentError);
}

TEST(ForwardMarginal, PerItemGammaMatchesScalarCalls) {
  auto y0 = torch::randn({3, 2, 4}, kDouble);
  auto eps = torch::randn({3, 2, 4}, kDouble);
  auto gamma = torch::tensor({0.1, 0.5, 0.9}, kDouble);
  auto batched = forward_marginal(y0, gamma, eps);
  for (int i = 0; i < 3; ++i) {
    auto single = forward_marginal(y0[i], gamma[i].item<double>(), eps[i]);
    EXPECT_TRUE(torch::allclose(batched[i], single, 0, 1e-15));
  }
}

TEST(ForwardMarginal, MonteCarloMoments) {
  Rng rng(5);
  const double y0 = 1.3;
  for (double gamma : {0.1, 0.5, 0.9}) {
    auto eps = rng.normal({100000}, torch::kDouble);
    auto out = forward_marginal(torch::full({100000}, y0, kDouble), gamma, eps);
    const double se_mean = std::sqrt((1 - gamma) / 100000);
    const double se_var = (1 - gamma) * std::sqrt(2.0 / 99999);
    EXPECT_NEAR(out.mean().item<double>(), std::sqrt(gamma) * y0, 4 * se_mean);
    EXPECT_NEAR(out.var().item<double>(), 1 - gamma, 4 * se_var);
  }
}

TEST(Posterior, FirstStepCollapsesOntoY0) {
  auto s = build_linear_schedule(3, 0.2, 0.8, 1.0);
  auto y0 = torch::randn({2, 3}, kDouble);
  auto yt = torch::randn({2, 3}, kDouble);
  auto p = posterior_params(y0, yt, 1, s);
  EXPECT_TRUE(torch::allclose(p.mean, y0, 0, 1e-12));
  EXPECT_NEAR(p.variance, 0.0, 1e-15);
}

TEST(Posterior, ScalarFormula) {
  NoiseSchedule s({0.9, 0.8}, 1.0);
  auto p = posterior_params(scalar_epoch(1.0), scalar_epoch(1.0), 2, s);
  EXPECT_NEAR(p.mean.item<double>(), 0.99707, 5e-6);
  EXPECT_NEAR(p.variance, 0.0714286, 5e-7);
}

TEST(Posterior, RejectsOutOfRangeStep) {
  NoiseSchedule s({0.9, 0.8}, 1.0);
  EXPECT_THROW(posterior_params(scalar_epoch(0), scalar_epoch(0), 0, s), ArgumentError);
  EXPECT_THROW(posterior_params(scalar_epoch(0), scalar_epoch(0), 3, s), ArgumentError);
}

TEST(Posterior, ResidualOfSimulatedChainIsIndependentGaussian) {
  // Simulate y0 -> y_{t-1} -> y_t and check y_{t-1} - mu(y0, y_t) ~ N(0, sigma^2).
  NoiseSchedule s({0.9, 0.8, 0.7}, 1.0);
  const int t = 3;
  const int n = 200000;
  Rng rng(21);
  const double y0 = 0.7;
  auto prev = std::sqrt(s.gamma(t - 1)) * y0 + std::sqrt(1 - s.gamma(t - 1)) * rng.normal({n}, torch::kDouble);
  auto yt = std::sqrt(s.alpha(t)) * prev + std::sqrt(1 - s.alpha(t)) * rng.normal({n}, torch::kDouble);
  auto p = posterior_params(torch::full({n}, y0, kDouble), yt, t, s);
  auto resid = prev - p.mean;
  const double se_mean = std::sqrt(p.variance / n);
  const double se_var = p.variance * std::sqrt(2.0 / (n - 1));
  EXPECT_LT(std::abs(resid.mean().item<double>()), 3 * se_mean);
  EXPECT_LT(std::abs(resid.var().item<double>() - p.variance), 3 * se_var);
  // Uncorrelated with y_t.
  auto corr = ((resid - resid.mean()) * (yt - yt.mean())).mean() / (resid.std() * yt.std());
  EXPECT_LT(std::abs(corr.item<double>()), 3.0 / std::sqrt(n));
}

TEST(Augment, ZeroDeltaIsIdentity) {
  Rng rng(1);
  auto x = torch::randn({4, 8});
  EXPECT_TRUE(torch::equal(augment_condition(x, 0.0, rng), x));
}

TEST(Augment, RiggedNoise) {
  auto out = augment_condition(scalar_epoch(1.0), 0.01, scalar_epoch(2.0));
  EXPECT_NEAR(out.item<double>(), 1.02, 1e-15);
}

TEST(Augment, NegativeDeltaRejected) {
  Rng rng(1);
  EXPECT_THROW(augment_condition(torch::zeros({2, 2}), -0.1, rng), ArgumentError);
}

TEST(Augment, MonteCarloMoments) {
  Rng rng(9);
  auto x = torch::zeros({1000, 1000}, kDouble);
  auto diff = augment_condition(x, 0.05, rng) - x;
  EXPECT_LT(std::abs(diff.mean().item<double>()), 0.01 * 0.05);
  EXPECT_NEAR(diff.var().item<double>() / 0.0025, 1.0, 0.01);
}

TEST(TrainingLoss, PerfectPredictionIsZero) {
  Rng rng(2);
  auto s = build_linear_schedule(10, 0.1, 0.5, 1.0);
  auto item = make_training_batch(torch::randn({4, 2, 8}), s, 0.01, rng);
  auto eps = item.epsilon;
  NoisePredictor oracle = [eps](const torch::Tensor&, const torch::Tensor&, const torch::Tensor&) { return eps; };
  EXPECT_EQ(training_loss(oracle, item, 2).item<double>(), 0.0);
  EXPECT_EQ(training_loss(oracle, item, 1).item<double>(), 0.0);
}

TEST(TrainingLoss, ConstantResidual) {
  TrainingItem item{torch::zeros({2, 3, 4}, kDouble), torch::zeros({2, 3, 4}, kDouble),
                    torch::full({2}, 0.5, kDouble), torch::zeros({2, 3, 4}, kDouble)};
  auto half = constant_predictor(0.5);
  EXPECT_NEAR(training_loss(half, item, 2).item<double>(), 0.25, 1e-15);
  EXPECT_NEAR(training_loss(half, item, 1).item<double>(), 0.5, 1e-15);
  EXPECT_THROW(training_loss(half, item, 3), ArgumentError);
}

TEST(TrainingLoss, NonNegativeOnRandomInputs) {
  auto s = build_linear_schedule(20, 0.01, 0.3, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(static_cast<std::uint64_t>(trial));
    auto item = make_training_batch(rng.normal({2, 3, 5}), s, 0.05, rng);
    auto noise = rng.normal({2, 3, 5});
    NoisePredictor f = [noise](const torch::Tensor&, const torch::Tensor&, const torch::Tensor&) { return noise; };
    ASSERT_GE(training_loss(f, item, 1 + trial % 2).item<double>(), 0.0);
  }
}

TEST(TrainingLoss, NonFiniteOutputRaises) {
  TrainingItem item{torch::zeros({1, 2, 2}), torch::zeros({1, 2, 2}), torch::full({1}, 0.5),
                    torch::zeros({1, 2, 2})};
  auto nan = constant_predictor(std::nan(""));
  EXPECT_THROW(training_loss(nan, item, 2), RunError);
}

TEST(TrainingBatch, NoisyTargetMatchesConstruction) {
  Rng rng(4);
  auto s = build_linear_schedule(50, 1e-3, 0.2);
  auto y0 = torch::randn({6, 2, 8}, kDouble);
  auto item = make_training_batch(y0, s, 0.0, rng);
  EXPECT_TRUE(torch::equal(item.x_delta, y0));
  auto g = item.gamma.reshape({-1, 1, 1});
  EXPECT_TRUE(torch::allclose(item.y_tilde, torch::sqrt(g) * y0 + torch::sqrt(1 - g) * item.epsilon, 0, 1e-14));
  EXPECT_TRUE((item.gamma > s.gamma(50)).all().item<bool>());
  EXPECT_TRUE((item.gamma < 1).all().item<bool>());
}

TEST(EstimateY0, InvertsForwardMarginal) {
  auto y0 = torch::randn({4, 16}, kDouble);
  auto eps = torch::randn({4, 16}, kDouble);
  for (double g : {0.01, 0.1, 0.5, 0.9, 1.0}) {
    auto back = estimate_y0(forward_marginal(y0, g, eps), eps, g);
    EXPECT_LE(((back - y0).abs() / y0.abs()).max().item<double>(), 1e-5);
  }
}

TEST(EstimateY0, ScalarAndEdges) {
  EXPECT_NEAR(estimate_y0(scalar_epoch(1.0), scalar_epoch(0.5), 0.64).item<double>(), 0.875, 1e-15);
  auto y = torch::randn({2, 3});
  EXPECT_TRUE(torch::equal(estimate_y0(y, torch::randn({2, 3}), 1.0), y));
  EXPECT_THROW(estimate_y0(y, y, 0.0), ArgumentError);
}

TEST(RefinementStep, IdentityInTheNoNoiseLimit) {
  NoiseSchedule s({0.5, 1.0 - 1e-12}, 1.0);
  auto y = torch::randn({2, 3}, kDouble);
  auto out = refinement_step(constant_predictor(0.0), y, y, 2, s, torch::zeros_like(y));
  EXPECT_TRUE(torch::allclose(out, y, 0, 1e-11));
}

TEST(RefinementStep, ScalarFormula) {
  NoiseSchedule s({2.0 / 3.0, 0.75}, 1.0);
  ASSERT_NEAR(s.gamma(2), 0.5, 1e-15);
  auto out = refinement_step(constant_predictor(1.0), scalar_epoch(0.0), scalar_epoch(1.0), 2, s,
                             scalar_epoch(0.0));
  EXPECT_NEAR(out.item<double>(), 0.74645, 5e-6);
}

TEST(RefinementStep, DeterministicUnderSeed) {
  auto s = build_linear_schedule(10, 0.05, 0.5, 1.0);
  auto y = torch::randn({3, 4});
  Rng a(77), b(77);
  auto f = constant_predictor(0.2);
  EXPECT_TRUE(torch::equal(refinement_step(f, y, y, 5, s, a), refinement_step(f, y, y, 5, s, b)));
}

TEST(RefinementStep, NonFiniteModelOutputRaises) {
  auto s = build_linear_schedule(10, 0.05, 0.5, 1.0);
  auto y = torch::zeros({2, 2});
  Rng rng(1);
  EXPECT_THROW(refinement_step(constant_predictor(INFINITY), y, y, 3, s, rng), RunError);
}

TEST(Generate, ShapeAndDeterminism) {
  auto s = build_linear_schedule(50, 1e-3, 0.2);
  auto x = torch::randn({32, 128});
  auto f = constant_predictor(0.0);
  Rng a(5), b(5);
  auto ya = generate(f, x, 0.01, s, 50, a);
  auto yb = generate(f, x, 0.01, s, 50, b);
  EXPECT_EQ(ya.sizes(), x.sizes());
  EXPECT_TRUE(torch::equal(ya, yb));
  EXPECT_THROW(generate(f, x, 0.01, s, 0, a), ArgumentError);
}

TEST(Generate, OracleDenoiserConvergesToTarget) {
  auto s = build_linear_schedule(500, 1e-4, 0.02);
  auto target = torch::randn({1, 2, 16}, kDouble);
  Rng rng(8);
  auto out = generate(oracle_predictor(target), target, 0.01, s, 100, rng);
  EXPECT_LE(((out - target).norm() / target.norm()).item<double>(), 1e-3);
}

TEST(Generate, BatchMatchesPerEpochStreams) {
  auto s = build_linear_schedule(100, 1e-3, 0.1);
  auto x = torch::randn({3, 2, 8}, kDouble);
  auto target = torch::randn({1, 2, 8}, kDouble);
  auto f = oracle_predictor(target);
  auto batch = generate_batch(f, x, 0.05, s, 20, 1234, 10);
  for (int i = 0; i < 3; ++i) {
    Rng stream(mix_seed(1234, 10 + static_cast<std::uint64_t>(i)));
    auto single = generate(f, x.slice(0, i, i + 1), 0.05, s, 20, stream);
    EXPECT_TRUE(torch::allclose(batch.slice(0, i, i + 1), single, 0, 1e-12));
  }
}
