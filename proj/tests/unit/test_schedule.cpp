#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "eegdiff/core/errors.hpp"
#include "eegdiff/diffusion/schedule.hpp"

using namespace eegdiff;
using namespace eegdiff::diffusion;

TEST(LinearSchedule, SingleStep) {
  auto s = build_linear_schedule(1, 0.5, 0.5, 1.0);
  ASSERT_EQ(s.steps(), 1);
  EXPECT_DOUBLE_EQ(s.alpha(1), 0.5);
  EXPECT_DOUBLE_EQ(s.gamma(1), 0.5);
  EXPECT_DOUBLE_EQ(s.gamma(0), 1.0);
}

TEST(LinearSchedule, FourStepsMatchHandProducts) {
  auto s = build_linear_schedule(4, 0.1, 0.4, 1.0);
  const std::array<double, 4> alpha{0.9, 0.8, 0.7, 0.6};
  const std::array<double, 4> gamma{0.9, 0.72, 0.504, 0.3024};
  for (int t = 1; t <= 4; ++t) {
    EXPECT_NEAR(s.alpha(t), alpha[t - 1], 1e-15);
    EXPECT_NEAR(s.gamma(t), gamma[t - 1], 1e-15);
  }
}

TEST(LinearSchedule, DefaultT500ReachesTerminalBound) {
  auto s = build_linear_schedule(500, 1e-4, 0.02);
  EXPECT_LE(s.gamma(500), 0.01);
  for (int t = 1; t <= 500; ++t) EXPECT_LT(s.gamma(t), s.gamma(t - 1));
}

TEST(LinearSchedule, RejectsBadArguments) {
  EXPECT_THROW(build_linear_schedule(0, 0.1, 0.2, 1.0), ArgumentError);
  EXPECT_THROW(build_linear_schedule(4, 0.0, 0.2, 1.0), ArgumentError);
  EXPECT_THROW(build_linear_schedule(4, 0.1, 1.0, 1.0), ArgumentError);
  EXPECT_THROW(build_linear_schedule(4, 0.3, 0.2, 1.0), ArgumentError);
  // gamma_T = 0.3024 exceeds the default ceiling of 0.01.
  EXPECT_THROW(build_linear_schedule(4, 0.1, 0.4), ArgumentError);
}

TEST(LinearSchedule, PropertyStoredGammaIsBitwiseProduct) {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> steps(1, 1000);
  std::uniform_real_distribution<double> beta(1e-5, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    double b0 = beta(gen), b1 = beta(gen);
    if (b0 > b1) std::swap(b0, b1);
    auto s = build_linear_schedule(steps(gen), b0, b1, 1.0);
    double product = 1.0;
    for (int t = 1; t <= s.steps(); ++t) {
      product *= s.alpha(t);
      ASSERT_EQ(product, s.gamma(t));
      ASSERT_LT(s.gamma(t), s.gamma(t - 1));
      ASSERT_GT(s.alpha(t), 0.0);
      ASSERT_LT(s.alpha(t), 1.0);
    }
  }
}

TEST(Respace, KeepsParentGammasOnTheSubgrid) {
  auto s = build_linear_schedule(500, 1e-4, 0.02);
  auto r = respace(s, 100);
  ASSERT_EQ(r.steps(), 100);
  for (int k = 1; k <= 100; ++k) EXPECT_NEAR(r.gamma(k), s.gamma(5 * k), 1e-12);
  EXPECT_EQ(respace(s, 500).gammas(), s.gammas());
  EXPECT_THROW(respace(s, 0), ArgumentError);
  EXPECT_THROW(respace(s, 501), ArgumentError);
}

TEST(SampleGamma, SingleStepDrawsStayInsideInterval) {
  auto s = build_linear_schedule(1, 0.5, 0.5, 1.0);
  Rng rng(11);
  for (int i = 0; i < 100000; ++i) {
    auto d = sample_gamma(s, rng);
    ASSERT_EQ(d.t, 1);
    ASSERT_GT(d.gamma, 0.5);
    ASSERT_LT(d.gamma, 1.0);
  }
}

TEST(SampleGamma, SegmentFrequenciesAreUniform) {
  auto s = build_linear_schedule(4, 0.1, 0.4, 1.0);
  Rng rng(3);
  const int n = 100000;
  std::array<int, 4> counts{};
  for (int i = 0; i < n; ++i) {
    auto d = sample_gamma(s, rng);
    ASSERT_GT(d.gamma, s.gamma(d.t));
    ASSERT_LT(d.gamma, s.gamma(d.t - 1));
    // Locate the segment from the value alone.
    int seg = 0;
    while (d.gamma < s.gamma(seg + 1)) ++seg;
    ASSERT_EQ(seg + 1, d.t);
    ++counts[static_cast<std::size_t>(seg)];
  }
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int c : counts) EXPECT_LT(std::abs(c - n / 4.0), 3 * sigma);
}

TEST(SampleGamma, CollapsedSegmentReturnsLowerEnd) {
  EXPECT_EQ(draw_in_segment(0.3, 0.3, 0.7), 0.3);
  EXPECT_EQ(draw_in_segment(0.3, 0.3, 0.0), 0.3);
  EXPECT_GT(draw_in_segment(0.3, 0.4, 0.0), 0.3);
}

TEST(ScheduleConfig, JsonRoundTrip) {
  ScheduleConfig c;
  c.steps = 100;
  c.beta_start = 1e-3;
  c.beta_end = 0.09;
  c.inference_steps = 50;
  c.delta = 0.05;
  c.loss_p = 1;
  c.seed = 42;
  nlohmann::json j = c;
  auto back = j.get<ScheduleConfig>();
  EXPECT_EQ(back.steps, 100);
  EXPECT_EQ(back.inference_steps, 50);
  EXPECT_EQ(back.loss_p, 1);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_DOUBLE_EQ(back.delta, 0.05);
  EXPECT_DOUBLE_EQ(back.beta_end, 0.09);
}
