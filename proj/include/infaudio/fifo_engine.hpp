// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "infaudio/denoiser.hpp"
#include "infaudio/error.hpp"
#include "infaudio/memory.hpp"
#include "infaudio/noise_schedule.hpp"
#include "infaudio/rng.hpp"
#include "infaudio/timestep_plan.hpp"

namespace infaudio {

/// Sliding: completed frames slide into the buffer, oldest dropped.
/// Static: the buffer keeps the primer's frames forever.
enum class BufferMode { Sliding, Static };

constexpr std::string_view to_string(BufferMode m) {
  return m == BufferMode::Sliding ? "sliding" : "static";
}

/// Default buffer length: a quarter of the diagonal, rounded up.
constexpr std::size_t default_buffer_len(std::size_t diagonal_len) noexcept {
  return (diagonal_len + 3) / 4;
}

/// Receives completed frames in order. Returning false aborts the run.
class FrameSink {
 public:
  virtual ~FrameSink() = default;
  virtual bool write_frame(std::span<const float> frame) = 0;
};

class CallbackSink final : public FrameSink {
 public:
  explicit CallbackSink(std::function<bool(std::span<const float>)> fn) : fn_(std::move(fn)) {}
  bool write_frame(std::span<const float> frame) override { return fn_(frame); }

 private:
  std::function<bool(std::span<const float>)> fn_;
};

struct RunStats {
  std::size_t frames = 0;
  std::size_t denoiser_calls = 0;
  std::size_t peak_bytes = 0;
  double wall_ms = 0.0;
  std::vector<std::size_t> boundaries;  // frame indices that start a new window (concat)
};

/// Thrown when the sink refuses a frame; carries what was produced so far.
class SinkFailure : public Error {
 public:
  explicit SinkFailure(RunStats partial)
      : Error(Errc::SinkFailure, "sink rejected frame " + std::to_string(partial.frames)),
        partial_(std::move(partial)) {}
  const RunStats& partial() const noexcept { return partial_; }

 private:
  RunStats partial_;
};

/// Fixed-size window: `buffer_len` Clean context frames followed by the
/// diagonal. Diagonal position j (0-based) holds the frame currently at
/// schedule entry t_{n-j}: position 0 is the most denoised (t_n), position
/// n-1 the noisiest (t_1 = M). One contiguous allocation backs the whole
/// window so the denoiser sees it without copying.
class DiagonalQueue {
 public:
  DiagonalQueue(FrameShape shape, TimestepSchedule tsched, std::size_t buffer_len, BufferMode mode,
                std::uint64_t seed, AllocationMeter* meter)
      : shape_(shape),
        tsched_(std::move(tsched)),
        buffer_len_(buffer_len),
        mode_(mode),
        seed_(seed),
        values_(window_len() * shape.frame_size(), meter),
        eps_(window_len() * shape.frame_size(), meter),
        taus_(window_len(), meter),
        completed_(shape.frame_size(), meter) {
    const std::size_t n = diagonal_len();
    for (std::size_t j = 0; j < n; ++j) taus_[buffer_len_ + j] = Tau{tsched_[n - 1 - j]};
  }

  const FrameShape& shape() const noexcept { return shape_; }
  const TimestepSchedule& schedule() const noexcept { return tsched_; }
  BufferMode buffer_mode() const noexcept { return mode_; }
  std::size_t buffer_len() const noexcept { return buffer_len_; }
  std::size_t diagonal_len() const noexcept { return tsched_.size(); }
  std::size_t window_len() const noexcept { return buffer_len_ + tsched_.size(); }
  std::uint64_t produced() const noexcept { return produced_; }
  std::uint64_t enqueued() const noexcept { return enqueued_; }

  std::span<const Tau> taus() const noexcept { return taus_.span(); }
  std::span<const float> values() const noexcept { return values_.span(); }
  std::span<const float> buffer() const noexcept {
    return values_.span().first(buffer_len_ * shape_.frame_size());
  }
  std::span<const float> diagonal(std::size_t j) const {
    return frame(buffer_len_ + j);
  }
  std::span<const float> frame(std::size_t i) const {
    return values_.span().subspan(i * shape_.frame_size(), shape_.frame_size());
  }

  /// Diagonal timesteps, position 0 first; strictly increasing.
  std::vector<std::int32_t> diagonal_timesteps() const {
    std::vector<std::int32_t> out;
    for (std::size_t j = 0; j < diagonal_len(); ++j) out.push_back(taus_[buffer_len_ + j].value());
    return out;
  }

 private:
  friend DiagonalQueue init_queue(const TimestepSchedule&, std::size_t, BufferMode,
                                  const SamplerContext&, std::uint64_t);
  friend std::span<const float> fifo_step(DiagonalQueue&, const SamplerContext&);

  std::span<float> mutable_frame(std::size_t i) {
    return values_.span().subspan(i * shape_.frame_size(), shape_.frame_size());
  }

  FrameShape shape_;
  TimestepSchedule tsched_;
  std::size_t buffer_len_;
  BufferMode mode_;
  std::uint64_t seed_;
  std::uint64_t produced_ = 0;
  std::uint64_t enqueued_ = 0;
  TrackedBuffer<float> values_;
  TrackedBuffer<float> eps_;
  TrackedBuffer<Tau> taus_;
  TrackedBuffer<float> completed_;
};

/// Builds the starting queue: a primer of buffer_len + n frames is sampled
/// with the uniform-timestep sampler; the first buffer_len become the Clean
/// buffer and diagonal position j is re-noised from its primer frame to
/// timestep t_{n-j} with fresh seeded noise.
inline DiagonalQueue init_queue(const TimestepSchedule& tsched, std::size_t buffer_len,
                                BufferMode mode, const SamplerContext& ctx, std::uint64_t seed) {
  detail::check_trajectory(tsched, ctx.schedule);
  // Primer calls are not part of the streaming call budget.
  SamplerContext primer_ctx{ctx.denoiser, ctx.schedule, ctx.shape, ctx.condition, ctx.meter, nullptr};

  DiagonalQueue q(ctx.shape, tsched, buffer_len, mode, seed, ctx.meter);
  const std::size_t fs = ctx.shape.frame_size();
  const std::size_t n = q.diagonal_len();
  const std::size_t L = q.window_len();

  TrackedBuffer<float> primer_noise(L * fs, ctx.meter);
  for (std::size_t i = 0; i < L; ++i)
    fill_standard_normal(primer_noise.span().subspan(i * fs, fs), seed, NoisePurpose::Primer, i);
  const std::vector<float> primer = batch_sample_from(std::move(primer_noise), tsched, primer_ctx);
  const std::span<const float> primer_view(primer);

  std::copy_n(primer.begin(), buffer_len * fs, q.values_.data());
  std::vector<float> noise(fs);
  for (std::size_t j = 0; j < n; ++j) {
    fill_standard_normal(std::span<float>(noise), seed, NoisePurpose::Renoise, j);
    forward_perturb(primer_view.subspan((buffer_len + j) * fs, fs), tsched[n - 1 - j], noise,
                    ctx.schedule, q.mutable_frame(buffer_len + j));
  }
  return q;
}

/// Advances every diagonal frame by one schedule entry with a single
/// window-wide denoiser call, dequeues the newly Clean head and enqueues a
/// fresh standard-normal frame at t_1. Returns the completed frame; the view
/// stays valid until the next step.
inline std::span<const float> fifo_step(DiagonalQueue& q, const SamplerContext& ctx) {
  const std::size_t fs = q.shape_.frame_size();
  const std::size_t b = q.buffer_len_;
  const std::size_t n = q.diagonal_len();
  const std::size_t L = q.window_len();
  if (!(ctx.shape == q.shape_)) throw Error(Errc::ShapeMismatch, "context shape differs from queue");

  const FrameWindow window{q.shape_, q.values_.span(), q.taus_.span(), ctx.condition};
  ctx.denoiser.predict_eps_into(window, ctx.schedule, q.eps_.span());
  ctx.count_call();

  const std::span<const float> eps = q.eps_.span();
  for (std::size_t j = 0; j < n; ++j) {
    const std::int32_t tau = q.tsched_[n - 1 - j];
    const Tau next = j == 0 ? Tau::clean() : Tau{q.tsched_[n - j]};
    auto frame = q.mutable_frame(b + j);
    ddim_step(frame, eps.subspan((b + j) * fs, fs), tau, next, ctx.schedule, frame);
  }

  float* base = q.values_.data();
  std::memcpy(q.completed_.data(), base + b * fs, fs * sizeof(float));
  if (q.mode_ == BufferMode::Sliding && b > 0) {
    // Shift the whole window: the completed head lands at the buffer's end.
    std::memmove(base, base + fs, (L - 1) * fs * sizeof(float));
  } else {
    std::memmove(base + b * fs, base + (b + 1) * fs, (n - 1) * fs * sizeof(float));
  }
  fill_standard_normal(q.mutable_frame(L - 1), q.seed_, NoisePurpose::Fresh, q.enqueued_++);
  ++q.produced_;
  return q.completed_.span();
}

/// Everything that determines a FIFO run besides the denoiser.
struct FifoConfig {
  TimestepSchedule tsched;
  std::size_t buffer_len = 0;
  BufferMode buffer_mode = BufferMode::Sliding;
  std::uint64_t seed = 0;
};

namespace detail {

class WallClock {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline SamplerContext metered(const SamplerContext& ctx, AllocationMeter& meter, std::size_t& calls) {
  return SamplerContext{ctx.denoiser, ctx.schedule, ctx.shape, ctx.condition, &meter, &calls};
}

}  // namespace detail

/// Streams `frames` completed frames into `sink` using exactly `frames`
/// FIFO steps after queue initialization. Memory held is independent of
/// `frames`.
inline RunStats generate_stream(std::size_t frames, const FifoConfig& cfg, const SamplerContext& ctx,
                                FrameSink& sink) {
  if (frames < 1) throw Error(Errc::InvalidCount, "generate_stream needs at least one frame");
  detail::WallClock clock;
  AllocationMeter meter;
  RunStats stats;
  const SamplerContext run_ctx = detail::metered(ctx, meter, stats.denoiser_calls);

  DiagonalQueue q = init_queue(cfg.tsched, cfg.buffer_len, cfg.buffer_mode, run_ctx, cfg.seed);
  for (std::size_t k = 0; k < frames; ++k) {
    const auto done = fifo_step(q, run_ctx);
    if (!sink.write_frame(done)) {
      stats.peak_bytes = meter.peak_bytes();
      stats.wall_ms = clock.elapsed_ms();
      throw SinkFailure(std::move(stats));
    }
    ++stats.frames;
  }
  stats.peak_bytes = meter.peak_bytes();
  stats.wall_ms = clock.elapsed_ms();
  return stats;
}

/// Uniform-timestep baseline over all `frames` at once; memory grows with `frames`.
inline RunStats generate_batch(std::size_t frames, const TimestepSchedule& tsched, std::uint64_t seed,
                               const SamplerContext& ctx, FrameSink& sink) {
  detail::WallClock clock;
  AllocationMeter meter;
  RunStats stats;
  const SamplerContext run_ctx = detail::metered(ctx, meter, stats.denoiser_calls);
  const auto out = batch_sample(frames, tsched, run_ctx, seed);
  const std::size_t fs = ctx.shape.frame_size();
  for (std::size_t i = 0; i < frames; ++i) {
    if (!sink.write_frame(std::span<const float>(out).subspan(i * fs, fs))) {
      stats.peak_bytes = meter.peak_bytes();
      throw SinkFailure(std::move(stats));
    }
    ++stats.frames;
  }
  stats.peak_bytes = meter.peak_bytes();
  stats.wall_ms = clock.elapsed_ms();
  return stats;
}

/// Concatenation baseline: ceil(frames / window) independently sampled
/// windows stitched back to back. Window w draws the latent substreams of
/// its global frame indices, so a single window reproduces generate_batch.
inline RunStats generate_concat(std::size_t frames, std::size_t window, const TimestepSchedule& tsched,
                                std::uint64_t seed, const SamplerContext& ctx, FrameSink& sink) {
  if (window < 1) throw Error(Errc::InvalidCount, "concat window must be >= 1");
  if (frames < 1) throw Error(Errc::InvalidCount, "generate_concat needs at least one frame");
  detail::WallClock clock;
  AllocationMeter meter;
  RunStats stats;
  const SamplerContext run_ctx = detail::metered(ctx, meter, stats.denoiser_calls);
  const std::size_t fs = ctx.shape.frame_size();

  for (std::size_t start = 0; start < frames; start += window) {
    if (start > 0) stats.boundaries.push_back(start);
    const std::size_t count = std::min(window, frames - start);
    const auto out = batch_sample(count, tsched, run_ctx, seed, start);
    for (std::size_t i = 0; i < count; ++i) {
      if (!sink.write_frame(std::span<const float>(out).subspan(i * fs, fs))) {
        stats.peak_bytes = meter.peak_bytes();
        throw SinkFailure(std::move(stats));
      }
      ++stats.frames;
    }
  }
  stats.peak_bytes = meter.peak_bytes();
  stats.wall_ms = clock.elapsed_ms();
  return stats;
}

/// `frames,calls,peak_bytes,wall_ms`
inline void write_run_stats_csv(std::ostream& os, const RunStats& stats) {
  char row[128];
  std::snprintf(row, sizeof row, "%zu,%zu,%zu,%.3f\n", stats.frames, stats.denoiser_calls,
                stats.peak_bytes, stats.wall_ms);
  os << "frames,calls,peak_bytes,wall_ms\n" << row;
}

}  // namespace infaudio
