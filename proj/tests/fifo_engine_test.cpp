// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "infaudio/fifo_engine.hpp"
#include "infaudio/gp_denoiser.hpp"

namespace infaudio {
namespace {

struct Collect final : FrameSink {
  std::vector<float> values;
  std::size_t limit = static_cast<std::size_t>(-1);
  std::size_t seen = 0;
  bool write_frame(std::span<const float> frame) override {
    if (seen++ >= limit) return false;
    values.insert(values.end(), frame.begin(), frame.end());
    return true;
  }
};

class FifoTest : public ::testing::Test {
 protected:
  NoiseSchedule sched = NoiseSchedule::linear();
  FrameShape shape{2, 3};
  GaussianProcessDenoiser frame_local{GaussianProcessSpec::frame_local()};
  GaussianProcessDenoiser ar1{GaussianProcessSpec::ar1(0.9)};

  SamplerContext ctx(const Denoiser& d, std::size_t* calls = nullptr) const {
    return SamplerContext{d, sched, shape, {}, nullptr, calls};
  }
};

TEST_F(FifoTest, DiagonalLayoutOfInitialQueue) {
  const auto tsched = custom_schedule({1000, 400, 1}, 1000);
  const auto q = init_queue(tsched, 2, BufferMode::Sliding, ctx(frame_local), 3);
  EXPECT_EQ(q.diagonal_timesteps(), (std::vector<std::int32_t>{1, 400, 1000}));
  EXPECT_EQ(q.window_len(), 5u);
  EXPECT_TRUE(q.taus()[0].is_clean());
  EXPECT_TRUE(q.taus()[1].is_clean());
}

TEST_F(FifoTest, SingleFrameQueueIsAlmostPureNoise) {
  const auto tsched = custom_schedule({1000}, 1000);
  const auto q = init_queue(tsched, 0, BufferMode::Sliding, ctx(frame_local), 17);
  std::vector<float> noise(shape.frame_size());
  fill_standard_normal(std::span<float>(noise), 17, NoisePurpose::Renoise, 0);
  const double signal = std::sqrt(sched.alpha_bar(1000));
  ASSERT_LT(signal, 0.01);
  for (std::size_t k = 0; k < noise.size(); ++k)
    EXPECT_NEAR(q.diagonal(0)[k], std::sqrt(1 - sched.alpha_bar(1000)) * noise[k], 0.05);
}

TEST_F(FifoTest, InitIsDeterministic) {
  const auto tsched = equally_spaced(1000, 12);
  const auto a = init_queue(tsched, 3, BufferMode::Sliding, ctx(ar1), 5);
  const auto b = init_queue(tsched, 3, BufferMode::Sliding, ctx(ar1), 5);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end()));
  const auto c = init_queue(tsched, 3, BufferMode::Sliding, ctx(ar1), 6);
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin(), c.values().end()));
}

TEST_F(FifoTest, MinimalQueueStep) {
  const auto tsched = custom_schedule({1000}, 1000);
  auto q = init_queue(tsched, 0, BufferMode::Sliding, ctx(frame_local), 4);
  const std::vector<float> z(q.diagonal(0).begin(), q.diagonal(0).end());
  const std::vector<Tau> taus{Tau{1000}};
  const auto eps = frame_local.predict_eps({shape, z, taus, {}}, sched);
  const auto expected = ddim_step(z, eps, 1000, Tau::clean(), sched);

  const auto done = fifo_step(q, ctx(frame_local));
  EXPECT_TRUE(std::equal(done.begin(), done.end(), expected.begin(), expected.end()));

  std::vector<float> fresh(shape.frame_size());
  fill_standard_normal(std::span<float>(fresh), 4, NoisePurpose::Fresh, 0);
  EXPECT_TRUE(std::equal(fresh.begin(), fresh.end(), q.diagonal(0).begin(), q.diagonal(0).end()));
  EXPECT_EQ(q.diagonal_timesteps(), (std::vector<std::int32_t>{1000}));
}

TEST_F(FifoTest, FrameLocalFifoEqualsBatchPerFrame) {
  // Frame k >= n started as fresh noise index k - n and saw every schedule
  // entry once, exactly like a batch trajectory from the same noise.
  for (std::size_t b : {0u, 1u, 5u}) {
    const auto tsched = region_focused(60, SamplingRegion::Final, 3);
    const NoiseSchedule s60 = NoiseSchedule::linear(60);
    const SamplerContext c{frame_local, s60, shape};
    const std::size_t n = tsched.size();
    Collect sink;
    generate_stream(n + 40, {tsched, b, BufferMode::Sliding, 21}, c, sink);
    const std::size_t fs = shape.frame_size();
    for (std::size_t k = n; k < n + 40; ++k) {
      std::vector<float> noise(fs);
      fill_standard_normal(std::span<float>(noise), 21, NoisePurpose::Fresh, k - n);
      const auto ref = batch_sample_from(noise, tsched, c);
      for (std::size_t i = 0; i < fs; ++i) ASSERT_NEAR(sink.values[k * fs + i], ref[i], 1e-5) << k;
    }
  }
}

TEST_F(FifoTest, TimestepMultisetAndBufferInvariantsOverRandomSteps) {
  std::mt19937_64 gen(123);
  std::uniform_int_distribution<int> steps_dist(2, 40);
  std::uniform_int_distribution<int> skip_dist(1, 4);
  std::uniform_int_distribution<std::size_t> buf_dist(0, 6);
  const SamplingRegion regions[] = {SamplingRegion::Initial, SamplingRegion::Middle, SamplingRegion::Final};
  std::size_t total_steps = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int total = 3 + steps_dist(gen);
    const NoiseSchedule s = NoiseSchedule::linear(total);
    const auto tsched = region_focused(total, regions[trial % 3], skip_dist(gen));
    const std::size_t b = buf_dist(gen);
    const BufferMode mode = trial % 2 ? BufferMode::Static : BufferMode::Sliding;
    const SamplerContext c{ar1, s, shape};
    auto q = init_queue(tsched, b, mode, c, trial);

    std::vector<std::int32_t> expected(tsched.steps.rbegin(), tsched.steps.rend());
    const std::size_t fs = shape.frame_size();
    for (int step = 0; step < 30; ++step, ++total_steps) {
      const std::vector<float> before(q.buffer().begin(), q.buffer().end());
      const auto done = fifo_step(q, c);
      ASSERT_EQ(q.diagonal_timesteps(), expected);
      for (std::size_t i = 0; i < b; ++i) ASSERT_TRUE(q.taus()[i].is_clean());
      const auto after = q.buffer();
      if (mode == BufferMode::Static || b == 0) {
        ASSERT_TRUE(std::equal(before.begin(), before.end(), after.begin(), after.end()));
      } else {
        // Oldest frame dropped, survivors untouched, completed frame appended.
        ASSERT_TRUE(std::equal(before.begin() + fs, before.end(), after.begin()));
        ASSERT_TRUE(std::equal(done.begin(), done.end(), after.end() - fs));
      }
    }
  }
  EXPECT_GE(total_steps, 1000u);
}

TEST_F(FifoTest, CountsOneCallPerFrame) {
  Collect sink;
  const FifoConfig cfg{equally_spaced(1000, 8), 2, BufferMode::Sliding, 1};
  EXPECT_EQ(generate_stream(1, cfg, ctx(frame_local), sink).denoiser_calls, 1u);
  Collect more;
  const auto stats = generate_stream(37, cfg, ctx(frame_local), more);
  EXPECT_EQ(stats.denoiser_calls, 37u);
  EXPECT_EQ(stats.frames, 37u);
  EXPECT_EQ(more.values.size(), 37 * shape.frame_size());
}

TEST_F(FifoTest, PeakBytesIndependentOfLength) {
  const FifoConfig cfg{equally_spaced(1000, 16), 4, BufferMode::Sliding, 1};
  std::size_t peak = 0;
  for (std::size_t n : {1u, 128u, 1024u}) {
    CallbackSink sink([](std::span<const float>) { return true; });
    const auto stats = generate_stream(n, cfg, ctx(frame_local), sink);
    if (peak == 0) peak = stats.peak_bytes;
    EXPECT_EQ(stats.peak_bytes, peak) << n;
  }
  EXPECT_GT(peak, 0u);
}

TEST_F(FifoTest, BatchPeakGrowsLinearly) {
  const auto tsched = equally_spaced(1000, 4);
  CallbackSink sink([](std::span<const float>) { return true; });
  const auto a = generate_batch(128, tsched, 1, ctx(frame_local), sink);
  const auto b = generate_batch(256, tsched, 1, ctx(frame_local), sink);
  EXPECT_DOUBLE_EQ(static_cast<double>(b.peak_bytes) / a.peak_bytes, 2.0);
}

TEST_F(FifoTest, StreamIsDeterministic) {
  const FifoConfig cfg{equally_spaced(1000, 10), 3, BufferMode::Sliding, 99};
  Collect a, b, c;
  generate_stream(50, cfg, ctx(ar1), a);
  generate_stream(50, cfg, ctx(ar1), b);
  EXPECT_EQ(a.values, b.values);
  FifoConfig other = cfg;
  other.seed = 100;
  generate_stream(50, other, ctx(ar1), c);
  EXPECT_NE(a.values, c.values);
}

TEST_F(FifoTest, SinkFailureReportsPartialCount) {
  const FifoConfig cfg{equally_spaced(1000, 6), 1, BufferMode::Sliding, 2};
  Collect sink;
  sink.limit = 5;
  try {
    generate_stream(20, cfg, ctx(frame_local), sink);
    FAIL();
  } catch (const SinkFailure& e) {
    EXPECT_EQ(e.code(), Errc::SinkFailure);
    EXPECT_EQ(e.partial().frames, 5u);
    EXPECT_EQ(e.partial().denoiser_calls, 6u);
  }
}

TEST_F(FifoTest, StaticBufferKeepsPrimerFrames) {
  const auto tsched = equally_spaced(1000, 6);
  auto q = init_queue(tsched, 3, BufferMode::Static, ctx(ar1), 8);
  const std::vector<float> primer(q.buffer().begin(), q.buffer().end());
  for (int i = 0; i < 25; ++i) fifo_step(q, ctx(ar1));
  EXPECT_TRUE(std::equal(primer.begin(), primer.end(), q.buffer().begin(), q.buffer().end()));
}

TEST_F(FifoTest, ConcatWithSingleWindowEqualsBatch) {
  const auto tsched = equally_spaced(1000, 10);
  Collect concat, batch;
  const auto stats = generate_concat(30, 30, tsched, 4, ctx(ar1), concat);
  generate_batch(30, tsched, 4, ctx(ar1), batch);
  EXPECT_EQ(concat.values, batch.values);
  EXPECT_TRUE(stats.boundaries.empty());

  Collect split;
  const auto windows = generate_concat(30, 8, tsched, 4, ctx(ar1), split);
  EXPECT_EQ(windows.boundaries, (std::vector<std::size_t>{8, 16, 24}));
  EXPECT_EQ(split.values.size(), concat.values.size());
  EXPECT_EQ(windows.denoiser_calls, 4u * 10u);
}

TEST_F(FifoTest, RejectsInvalidRuns) {
  Collect sink;
  EXPECT_THROW(generate_stream(0, {equally_spaced(1000, 4), 0, BufferMode::Sliding, 1}, ctx(frame_local), sink),
               Error);
  EXPECT_THROW(generate_concat(10, 0, equally_spaced(1000, 4), 1, ctx(frame_local), sink), Error);
  EXPECT_THROW(generate_stream(3, {equally_spaced(2000, 4), 0, BufferMode::Sliding, 1}, ctx(frame_local), sink),
               Error);
}

}  // namespace
}  // namespace infaudio
