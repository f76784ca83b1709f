// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "infaudio/noise_schedule.hpp"
#include "infaudio/rng.hpp"

namespace infaudio {
namespace {

TEST(NoiseScheduleTest, SingleStep) {
  const auto s = NoiseSchedule::linear(1, 0.5, 0.5);
  EXPECT_EQ(s.steps(), 1);
  EXPECT_DOUBLE_EQ(s.beta(1), 0.5);
  EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.5);
}

TEST(NoiseScheduleTest, TwoStepProduct) {
  const auto s = NoiseSchedule::linear(2, 0.1, 0.2);
  EXPECT_NEAR(s.alpha_bar(1), 0.9, 1e-15);
  EXPECT_NEAR(s.alpha_bar(2), 0.72, 1e-15);
  EXPECT_EQ(s.alpha_bar(1), 1.0 - s.beta(1));
}

TEST(NoiseScheduleTest, DefaultScheduleMatchesDirectProduct) {
  const auto s = NoiseSchedule::linear();
  ASSERT_EQ(s.steps(), 1000);
  long double product = 1.0L;
  for (int t = 1; t <= 1000; ++t) product *= 1.0L - (1e-4L + (2e-2L - 1e-4L) * (t - 1) / 999.0L);
  EXPECT_NEAR(s.alpha_bar(1000), static_cast<double>(product), 1e-15);
  EXPECT_GT(s.alpha_bar(1000), 0.0);
  EXPECT_LT(s.alpha_bar(1000), 1e-3);
}

TEST(NoiseScheduleTest, InvariantsHoldAcrossConfigurations) {
  for (int steps : {1, 2, 3, 10, 250, 1000, 4000})
    for (auto [lo, hi] : {std::pair{1e-4, 2e-2}, std::pair{0.3, 0.3}, std::pair{1e-5, 0.5}}) {
      if (steps == 4000 && hi >= 0.3) continue;  // underflows; rejected below
      const auto s = NoiseSchedule::linear(steps, lo, hi);
      EXPECT_EQ(s.alpha_bar(1), 1.0 - s.beta(1));
      for (int t = 1; t <= steps; ++t) {
        EXPECT_GT(s.beta(t), 0.0);
        EXPECT_LT(s.beta(t), 1.0);
        EXPECT_GT(s.alpha_bar(t), 0.0);
        EXPECT_LT(s.alpha_bar(t), 1.0);
        if (t > 1) {
          EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
        }
      }
    }
}

TEST(NoiseScheduleTest, RejectsScheduleThatUnderflows) {
  // 0.5^4000 is below the smallest subnormal, so the product stalls.
  try {
    NoiseSchedule::linear(4000, 0.5, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidRange);
  }
  EXPECT_NO_THROW(NoiseSchedule::linear(1000, 0.5, 0.5));
}

TEST(NoiseScheduleTest, RejectsInvalidRanges) {
  EXPECT_THROW(NoiseSchedule::linear(0, 1e-4, 2e-2), Error);
  EXPECT_THROW(NoiseSchedule::linear(10, 0.0, 2e-2), Error);
  EXPECT_THROW(NoiseSchedule::linear(10, 0.1, 0.05), Error);
  EXPECT_THROW(NoiseSchedule::linear(10, 0.1, 1.0), Error);
  try {
    NoiseSchedule::linear(10, 0.2, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidRange);
  }
}

TEST(NoiseScheduleTest, CleanReadsAsNoiseless) {
  const auto s = NoiseSchedule::linear();
  EXPECT_EQ(s.alpha_bar(Tau::clean()), 1.0);
  EXPECT_TRUE(s.contains(Tau::clean()));
  EXPECT_FALSE(s.contains(Tau{1001}));
  EXPECT_THROW(s.alpha_bar(0), Error);
}

TEST(NoiseScheduleTest, CsvDump) {
  const auto s = NoiseSchedule::linear(2, 0.1, 0.2);
  std::ostringstream os;
  s.write_csv(os);
  EXPECT_EQ(os.str(), "tau,beta,alpha_bar\n1,0.10000000000000001,0.90000000000000002\n"
                      "2,0.20000000000000001,0.72000000000000008\n");
}

TEST(ForwardPerturbTest, ArithmeticExamples) {
  const auto s = NoiseSchedule::linear(2, 0.1, 0.2);
  const std::vector<float> zeros(5, 0.0f), ones(5, 1.0f);
  for (float v : forward_perturb(zeros, 2, ones, s)) EXPECT_NEAR(v, 0.52915026, 1e-6);
  for (float v : forward_perturb(ones, 2, zeros, s)) EXPECT_NEAR(v, 0.84852814, 1e-6);
}

TEST(ForwardPerturbTest, ZeroNoiseLimit) {
  // beta ~ 1e-9 makes alpha_bar(1) ~ 1.
  const auto s = NoiseSchedule::linear(1, 1e-9, 1e-9);
  const std::vector<float> x0{0.5f, -2.0f, 3.25f}, eps{10.0f, -7.0f, 4.0f};
  const auto z = forward_perturb(x0, 1, eps, s);
  for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_NEAR(z[i], x0[i], 1e-3);
}

TEST(ForwardPerturbTest, Errors) {
  const auto s = NoiseSchedule::linear(10);
  const std::vector<float> a(3), b(4);
  try {
    forward_perturb(a, 1, b, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ShapeMismatch);
  }
  try {
    forward_perturb(a, 11, a, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TimestepOutOfRange);
  }
}

TEST(ForwardPerturbTest, ZeroNoiseScalesNorm) {
  const auto sched = NoiseSchedule::linear();
  NoiseStream gen(5, NoisePurpose::Test, 0);
  for (int tau : {1, 17, 500, 1000}) {
    std::vector<double> x0(64);
    gen.fill_normal(std::span<double>(x0));
    const std::vector<double> zero(64, 0.0);
    const auto z = forward_perturb(x0, tau, zero, sched);
    double nx = 0, nz = 0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      nx += x0[i] * x0[i];
      nz += z[i] * z[i];
    }
    EXPECT_NEAR(std::sqrt(nz), std::sqrt(sched.alpha_bar(tau)) * std::sqrt(nx), 1e-12 * std::sqrt(nx));

    // Float frames round each product once.
    const std::vector<float> xf(x0.begin(), x0.end()), zf0(64, 0.0f);
    const auto zf = forward_perturb(xf, tau, zf0, sched);
    for (std::size_t i = 0; i < xf.size(); ++i)
      EXPECT_EQ(zf[i], static_cast<float>(std::sqrt(sched.alpha_bar(tau)) * xf[i]));
  }
}

TEST(ForwardPerturbTest, VarianceMatchesOneMinusAlphaBar) {
  const auto s = NoiseSchedule::linear();
  constexpr std::size_t kDraws = 200000;
  for (int tau : {10, 300, 900}) {
    const std::vector<float> x0(kDraws, 0.75f);
    std::vector<float> eps(kDraws);
    NoiseStream(11, NoisePurpose::Test, static_cast<std::uint64_t>(tau)).fill_normal(std::span<float>(eps));
    const auto z = forward_perturb(x0, tau, eps, s);
    long double mean = 0;
    for (float v : z) mean += v;
    mean /= kDraws;
    long double var = 0;
    for (float v : z) var += (v - mean) * (v - mean);
    var /= kDraws - 1;
    const double target = 1.0 - s.alpha_bar(tau);
    const double se = target * std::sqrt(2.0 / (kDraws - 1));
    EXPECT_NEAR(static_cast<double>(var), target, 3 * se) << "tau=" << tau;
  }
}

}  // namespace
}  // namespace infaudio
