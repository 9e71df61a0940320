#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/core/rng.hpp"
#include "eegdiff/model/denoiser.hpp"
#include "eegdiff/model/trainer.hpp"
#include "temp_dir.hpp"

using namespace eegdiff;
using namespace eegdiff::model;
using eegdiff::testing::TempDir;

namespace {

DenoiserConfig tiny_config() {
  DenoiserConfig c;
  c.base_width = 8;
  c.depth = 2;
  c.channel_multipliers = {1, 2};
  c.blocks_per_stage = 1;
  c.attention_resolution = 4;
  c.dropout = 0.0;
  c.gamma_embed_dim = 16;
  return c;
}

Checkpoint tiny_checkpoint(int steps, std::uint64_t seed) {
  torch::manual_seed(seed);
  Checkpoint c;
  c.model = build_denoiser(tiny_config(), {4, 8});
  c.schedule.steps = 50;
  c.schedule.beta_start = 1e-3;
  c.schedule.beta_end = 0.2;
  c.options.steps = steps;
  c.options.batch_size = 4;
  c.options.warmup_steps = 5;
  c.options.seed = seed;
  return c;
}

}  // namespace

TEST(DenoiserConfig, Validation) {
  DenoiserConfig c;
  EXPECT_NO_THROW(c.validate());
  c.depth = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = DenoiserConfig{};
  c.channel_multipliers = {1, 2};
  EXPECT_THROW(c.validate(), ArgumentError);
  c = DenoiserConfig{};
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ArgumentError);
  EXPECT_THROW(build_denoiser(DenoiserConfig{}, {30, 128}), ArgumentError);
  EXPECT_THROW(build_denoiser(DenoiserConfig{}, {32, 100}), ArgumentError);
}

TEST(DenoiserConfig, JsonRoundTrip) {
  auto c = tiny_config();
  auto back = nlohmann::json(c).get<DenoiserConfig>();
  EXPECT_EQ(back.base_width, c.base_width);
  EXPECT_EQ(back.channel_multipliers, c.channel_multipliers);
  EXPECT_EQ(back.attention_resolution, c.attention_resolution);
  EXPECT_EQ(back.dropout, c.dropout);
}

TEST(BuildDenoiser, DefaultTopologyOnFullEpochs) {
  auto model = build_denoiser(DenoiserConfig{}, {32, 128});
  const auto& grids = model.net->stage_grids();
  ASSERT_EQ(grids.size(), 4u);
  EXPECT_EQ(grids.back(), (GridShape{4, 16}));
  EXPECT_EQ(model.net->attention_stages(), std::vector<int>{3});
}

TEST(BuildDenoiser, DepthOneHasNoAttention) {
  DenoiserConfig c;
  c.depth = 1;
  c.channel_multipliers = {1};
  auto model = build_denoiser(c, {32, 128});
  EXPECT_TRUE(model.net->attention_stages().empty());
  auto out = denoise_forward(model, torch::randn({32, 128}), torch::randn({32, 128}), 0.5);
  EXPECT_EQ(out.sizes(), torch::IntArrayRef({32, 128}));
}

TEST(BuildDenoiser, ParameterCountIsDeterministic) {
  auto a = build_denoiser(DenoiserConfig{}, {32, 128});
  auto b = build_denoiser(DenoiserConfig{}, {32, 128});
  EXPECT_EQ(a.net->parameter_count(), b.net->parameter_count());
  EXPECT_GT(a.net->parameter_count(), 0);
}

TEST(GammaEmbedding, BoundedAndPure) {
  for (int dim : {2, 16, 64}) {
    auto e = gamma_embedding(1.0, dim);
    ASSERT_EQ(e.size(), static_cast<std::size_t>(dim));
    for (double v : e) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(e, gamma_embedding(1.0, dim));
  }
  EXPECT_THROW(gamma_embedding(0.5, 7), ArgumentError);
  EXPECT_THROW(gamma_embedding(0.0, 8), ArgumentError);
  EXPECT_THROW(gamma_embedding(1.5, 8), ArgumentError);
}

TEST(GammaEmbedding, BatchedMatchesScalar) {
  auto g = torch::tensor({0.01, 0.3, 1.0}, torch::kDouble);
  auto batched = gamma_embedding(g, 32);
  for (int i = 0; i < 3; ++i) {
    auto ref = gamma_embedding(g[i].item<double>(), 32);
    for (int k = 0; k < 32; ++k) EXPECT_NEAR(batched[i][k].item<double>(), ref[k], 1e-12);
  }
}

TEST(GammaEmbedding, InjectiveOverSweep) {
  // 10^4 noise levels; any two whose square roots differ by more than 1e-6
  // must differ somewhere by more than 1e-9.
  Rng rng(3);
  std::vector<double> gammas;
  for (int i = 0; i < 10000; ++i) gammas.push_back(std::max(1e-12, rng.uniform()));
  gammas.push_back(1.0);
  std::sort(gammas.begin(), gammas.end());
  std::vector<std::vector<double>> emb;
  for (double g : gammas) emb.push_back(gamma_embedding(g, 64));
  auto differs = [&](std::size_t a, std::size_t b) {
    double best = 0;
    for (std::size_t k = 0; k < 64; ++k) best = std::max(best, std::abs(emb[a][k] - emb[b][k]));
    return best > 1e-9;
  };
  std::size_t checked = 0;
  for (std::size_t i = 0; i + 1 < gammas.size(); ++i) {
    if (std::abs(std::sqrt(gammas[i]) - std::sqrt(gammas[i + 1])) > 1e-6) {
      ASSERT_TRUE(differs(i, i + 1)) << gammas[i] << " vs " << gammas[i + 1];
      ++checked;
    }
  }
  for (int trial = 0; trial < 200000; ++trial) {
    auto a = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(gammas.size()) - 1));
    auto b = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(gammas.size()) - 1));
    if (std::abs(std::sqrt(gammas[a]) - std::sqrt(gammas[b])) > 1e-6) {
      ASSERT_TRUE(differs(a, b));
      ++checked;
    }
  }
  EXPECT_GT(checked, 100000u);
}

TEST(MergeSkip, ScalesSumByInverseRootTwo) {
  auto h = torch::randn({2, 3, 4, 5}, torch::kDouble);
  auto s = torch::randn({2, 3, 4, 5}, torch::kDouble);
  EXPECT_TRUE(torch::allclose(merge_skip(h, s), (h + s) / std::sqrt(2.0), 0, 1e-15));
  auto ones = torch::ones({1, 1, 2, 2}, torch::kDouble);
  EXPECT_NEAR(merge_skip(ones, ones)[0][0][0][0].item<double>(), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(merge_skip(h, torch::zeros({2, 3})), ArgumentError);
}

TEST(DenoiseForward, ZeroInputsGiveFiniteFullSizeOutput) {
  torch::manual_seed(0);
  auto model = build_denoiser(DenoiserConfig{}, {32, 128});
  model.net->eval();
  auto out = denoise_forward(model, torch::zeros({32, 128}), torch::zeros({32, 128}), 0.5);
  EXPECT_EQ(out.sizes(), torch::IntArrayRef({32, 128}));
  EXPECT_TRUE(torch::isfinite(out).all().item<bool>());
}

TEST(DenoiseForward, OutputDependsOnGamma) {
  torch::manual_seed(1);
  auto model = build_denoiser(tiny_config(), {4, 8});
  model.net->eval();
  auto x = torch::randn({4, 8});
  auto y = torch::randn({4, 8});
  auto a = denoise_forward(model, x, y, 0.1);
  auto b = denoise_forward(model, x, y, 0.9);
  EXPECT_GT((a - b).abs().max().item<double>(), 0.0);
}

TEST(DenoiseForward, ShapeErrors) {
  auto model = build_denoiser(tiny_config(), {4, 8});
  EXPECT_THROW(denoise_forward(model, torch::zeros({4, 8}), torch::zeros({4, 6}), 0.5), ArgumentError);
  EXPECT_THROW(denoise_forward(model, torch::zeros({8, 8}), torch::zeros({8, 8}), 0.5), ArgumentError);
}

TEST(DenoiseForward, BatchedAndSingleAgree) {
  torch::manual_seed(2);
  auto model = build_denoiser(tiny_config(), {4, 8});
  model.net->eval();
  auto x = torch::randn({3, 4, 8});
  auto y = torch::randn({3, 4, 8});
  auto batch = denoise_forward(model, x, y, 0.4);
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(torch::allclose(batch[i], denoise_forward(model, x[i], y[i], 0.4), 1e-5, 1e-6));
  }
}

TEST(Gradient, MatchesCentralFiniteDifferences) {
  torch::manual_seed(4);
  auto model = build_denoiser(tiny_config(), {4, 8});
  model.net->to(torch::kDouble);
  model.net->train();
  Rng rng(4);
  auto schedule = diffusion::build_linear_schedule(50, 1e-3, 0.2, 1.0);
  auto item = diffusion::make_training_batch(rng.normal({2, 4, 8}, torch::kDouble), schedule, 0.01, rng);
  auto predictor = model.predictor();
  auto loss_value = [&] { return diffusion::training_loss(predictor, item, 2); };

  model.net->zero_grad();
  loss_value().backward();

  std::vector<std::pair<torch::Tensor, std::int64_t>> picks;
  std::int64_t total = 0;
  for (auto& p : model.net->parameters()) {
    total += p.numel();
    for (std::int64_t k = 0; k < p.numel(); ++k) {
      if (rng.uniform() < 0.01) picks.emplace_back(p, k);
    }
  }
  ASSERT_GT(picks.size(), static_cast<std::size_t>(total / 200));

  torch::NoGradGuard no_grad;
  const double h = 1e-6;
  int checked = 0;
  for (auto& [p, k] : picks) {
    auto flat = p.view({-1});
    const double analytic = p.grad().view({-1})[k].item<double>();
    const double orig = flat[k].item<double>();
    flat[k] = orig + h;
    const double up = loss_value().item<double>();
    flat[k] = orig - h;
    const double down = loss_value().item<double>();
    flat[k] = orig;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    EXPECT_LE(std::abs(analytic - numeric) / scale, 1e-3) << "analytic " << analytic << " numeric " << numeric;
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Trainer, OverfitsSingleEpoch) {
  auto c = tiny_checkpoint(200, 5);
  auto data = torch::randn({1, 4, 8});
  auto schedule = c.schedule.build();
  auto curve = train_denoiser(c, data, schedule);
  ASSERT_EQ(curve.size(), 200u);
  auto avg = [&](std::size_t from, std::size_t to) {
    double s = 0;
    for (auto i = from; i < to; ++i) s += curve[i].loss;
    return s / static_cast<double>(to - from);
  };
  EXPECT_LT(avg(180, 200), avg(0, 20));
  EXPECT_EQ(c.step, 200);
}

TEST(Trainer, IdenticalSeedsGiveIdenticalCurves) {
  auto data = torch::randn({6, 4, 8});
  auto a = tiny_checkpoint(15, 7);
  auto b = tiny_checkpoint(15, 7);
  auto schedule = a.schedule.build();
  auto ca = train_denoiser(a, data, schedule);
  auto cb = train_denoiser(b, data, schedule);
  ASSERT_EQ(ca.size(), cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) EXPECT_EQ(ca[i].loss, cb[i].loss);
}

TEST(Trainer, DivergenceAborts) {
  auto c = tiny_checkpoint(3, 8);
  auto data = torch::full({2, 4, 8}, std::nan(""));
  auto schedule = c.schedule.build();
  EXPECT_THROW(train_denoiser(c, data, schedule), RunError);
  EXPECT_THROW(train_denoiser(c, torch::zeros({0, 4, 8}), schedule), ArgumentError);
}

TEST(Checkpoint, RoundTripGivesBitwiseEqualOutputs) {
  TempDir tmp;
  auto c = tiny_checkpoint(4, 9);
  auto schedule = c.schedule.build();
  train_denoiser(c, torch::randn({5, 4, 8}), schedule);
  save_checkpoint(c, tmp.path());
  auto back = load_checkpoint(tmp.path());
  EXPECT_EQ(back.step, 4);
  EXPECT_EQ(back.options.seed, 9u);
  EXPECT_EQ(back.schedule.steps, 50);
  back.model.net->eval();
  auto x = torch::randn({4, 8});
  auto y = torch::randn({4, 8});
  EXPECT_TRUE(torch::equal(denoise_forward(c.model, x, y, 0.3), denoise_forward(back.model, x, y, 0.3)));
}

TEST(Checkpoint, ResumeMatchesUninterruptedRun) {
  TempDir tmp;
  auto data = torch::randn({6, 4, 8});
  auto straight = tiny_checkpoint(12, 10);
  auto schedule = straight.schedule.build();
  auto full = train_denoiser(straight, data, schedule);

  auto first = tiny_checkpoint(6, 10);
  auto part1 = train_denoiser(first, data, schedule);
  save_checkpoint(first, tmp.path());
  auto resumed = load_checkpoint(tmp.path());
  resumed.options.steps = 12;
  auto part2 = train_denoiser(resumed, data, schedule);
  ASSERT_EQ(part1.size() + part2.size(), full.size());
  EXPECT_EQ(part2.front().step, 7);
  for (std::size_t i = 0; i < part2.size(); ++i) EXPECT_EQ(part2[i].loss, full[6 + i].loss);
}

TEST(LossCurve, CsvFormat) {
  TempDir tmp;
  write_loss_curve({{1, 0.5}, {2, 0.25}}, tmp / "loss.csv");
  write_loss_curve({{3, 0.125}}, tmp / "loss.csv", true);
  std::ifstream in(tmp / "loss.csv");
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(all, "step,loss\n1,0.5\n2,0.25\n3,0.125\n");
}
