// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "infaudio/error.hpp"
#include "infaudio/memory.hpp"
#include "infaudio/noise_schedule.hpp"
#include "infaudio/rng.hpp"
#include "infaudio/timestep_plan.hpp"

namespace infaudio {

/// Per-frame latent shape: channels x reduced frequency bins.
struct FrameShape {
  std::size_t channels = 8;
  std::size_t freq_bins = 16;

  std::size_t frame_size() const noexcept { return channels * freq_bins; }
  friend bool operator==(const FrameShape&, const FrameShape&) = default;
};

/// Non-owning view of L consecutive frames, each with its own timestep.
/// Values are frame-major, then channel, then frequency bin.
struct FrameWindow {
  FrameShape shape;
  std::span<const float> values;
  std::span<const Tau> taus;
  std::span<const float> condition;

  std::size_t length() const noexcept { return taus.size(); }

  std::span<const float> frame(std::size_t i) const {
    return values.subspan(i * shape.frame_size(), shape.frame_size());
  }

  void validate(const NoiseSchedule& sched) const {
    if (taus.empty()) throw Error(Errc::ShapeMismatch, "frame window is empty");
    if (values.size() != taus.size() * shape.frame_size())
      throw Error(Errc::ShapeMismatch, "window values do not match taus x frame size");
    for (Tau t : taus)
      if (!sched.contains(t)) throw Error(Errc::TimestepOutOfRange, "window timestep outside schedule");
  }
};

/// Noise predictor over a window of frames at (possibly different) timesteps.
/// Entries of the output belonging to Clean frames are unspecified and must
/// be ignored by callers.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual void predict_eps_into(const FrameWindow& window, const NoiseSchedule& sched,
                                std::span<float> eps) const = 0;

  std::vector<float> predict_eps(const FrameWindow& window, const NoiseSchedule& sched) const {
    std::vector<float> eps(window.values.size());
    predict_eps_into(window, sched, eps);
    return eps;
  }
};

namespace detail {

template <typename T>
void ddim_update_impl(std::span<const T> z, std::span<const T> eps_hat, double alpha_bar_from,
                      double alpha_bar_to, std::span<T> out) {
  if (z.size() != eps_hat.size() || out.size() != z.size())
    throw Error(Errc::ShapeMismatch, "z, eps_hat and output must have the same size");
  const double keep = std::sqrt(1.0 - alpha_bar_from);
  const double inv_signal = 1.0 / std::sqrt(alpha_bar_from);
  const double signal_to = std::sqrt(alpha_bar_to);
  const double noise_to = std::sqrt(1.0 - alpha_bar_to);
  const bool to_clean = alpha_bar_to == 1.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double eps = eps_hat[i];
    const double x0 = (z[i] - keep * eps) * inv_signal;
    out[i] = static_cast<T>(to_clean ? x0 : signal_to * x0 + noise_to * eps);
  }
}

template <typename T>
void ddim_step_impl(std::span<const T> z, std::span<const T> eps_hat, std::int32_t tau, Tau tau_next,
                    const NoiseSchedule& sched, std::span<T> out) {
  const double from = sched.alpha_bar(tau);
  if (!tau_next.is_clean() && tau_next.value() >= tau)
    throw Error(Errc::NonDecreasingStep, "tau_next must be below tau or Clean");
  if (!sched.contains(tau_next)) throw Error(Errc::TimestepOutOfRange, "tau_next outside schedule");
  ddim_update_impl(z, eps_hat, from, sched.alpha_bar(tau_next), out);
}

}  // namespace detail

/// Deterministic DDIM update between two explicit alpha_bar levels.
/// `alpha_bar_to == 1` returns the clean estimate x0_hat itself.
inline void ddim_update(std::span<const float> z, std::span<const float> eps_hat,
                        double alpha_bar_from, double alpha_bar_to, std::span<float> out) {
  detail::ddim_update_impl(z, eps_hat, alpha_bar_from, alpha_bar_to, out);
}

inline void ddim_update(std::span<const double> z, std::span<const double> eps_hat,
                        double alpha_bar_from, double alpha_bar_to, std::span<double> out) {
  detail::ddim_update_impl(z, eps_hat, alpha_bar_from, alpha_bar_to, out);
}

/// One deterministic DDIM step from `tau` to `tau_next` (a lower timestep or Clean).
/// `out` may alias `z`.
inline void ddim_step(std::span<const float> z, std::span<const float> eps_hat, std::int32_t tau,
                      Tau tau_next, const NoiseSchedule& sched, std::span<float> out) {
  detail::ddim_step_impl(z, eps_hat, tau, tau_next, sched, out);
}

inline void ddim_step(std::span<const double> z, std::span<const double> eps_hat, std::int32_t tau,
                      Tau tau_next, const NoiseSchedule& sched, std::span<double> out) {
  detail::ddim_step_impl(z, eps_hat, tau, tau_next, sched, out);
}

inline std::vector<float> ddim_step(std::span<const float> z, std::span<const float> eps_hat,
                                    std::int32_t tau, Tau tau_next, const NoiseSchedule& sched) {
  std::vector<float> out(z.size());
  ddim_step(z, eps_hat, tau, tau_next, sched, out);
  return out;
}

inline std::vector<double> ddim_step(std::span<const double> z, std::span<const double> eps_hat,
                                     std::int32_t tau, Tau tau_next, const NoiseSchedule& sched) {
  std::vector<double> out(z.size());
  ddim_step(z, eps_hat, tau, tau_next, sched, out);
  return out;
}

/// Everything a sampler needs besides the trajectory.
struct SamplerContext {
  const Denoiser& denoiser;
  const NoiseSchedule& schedule;
  FrameShape shape;
  std::span<const float> condition = {};
  AllocationMeter* meter = nullptr;
  std::size_t* denoiser_calls = nullptr;

  void count_call() const noexcept {
    if (denoiser_calls) ++*denoiser_calls;
  }
};

namespace detail {

inline void check_trajectory(const TimestepSchedule& tsched, const NoiseSchedule& sched) {
  tsched.validate(false);
  if (tsched.total_steps > sched.steps())
    throw Error(Errc::TimestepOutOfRange, "timestep schedule exceeds the noise schedule");
}

}  // namespace detail

/// Uniform-timestep sampling of an explicit block of initial latents
/// (frame-major, `latents.size()` a multiple of the frame size). Every frame
/// shares the timestep at each step; the trajectory ends in Clean.
inline std::vector<float> batch_sample_from(TrackedBuffer<float> latents,
                                            const TimestepSchedule& tsched,
                                            const SamplerContext& ctx) {
  detail::check_trajectory(tsched, ctx.schedule);
  const std::size_t fs = ctx.shape.frame_size();
  if (fs == 0 || latents.size() % fs != 0)
    throw Error(Errc::ShapeMismatch, "latent block is not a whole number of frames");
  const std::size_t frames = latents.size() / fs;
  TrackedBuffer<float> eps(latents.size(), ctx.meter);
  TrackedBuffer<Tau> taus(frames, ctx.meter);

  for (std::size_t k = 0; k < tsched.size(); ++k) {
    const Tau now{tsched[k]};
    const Tau next = k + 1 < tsched.size() ? Tau{tsched[k + 1]} : Tau::clean();
    std::fill(taus.data(), taus.data() + frames, now);
    const FrameWindow window{ctx.shape, latents.span(), taus.span(), ctx.condition};
    ctx.denoiser.predict_eps_into(window, ctx.schedule, eps.span());
    ctx.count_call();
    ddim_step(latents.span(), eps.span(), now.value(), next, ctx.schedule, latents.span());
  }
  return std::move(latents).release();
}

inline std::vector<float> batch_sample_from(std::vector<float> latents,
                                            const TimestepSchedule& tsched,
                                            const SamplerContext& ctx) {
  return batch_sample_from(TrackedBuffer<float>(std::move(latents), ctx.meter), tsched, ctx);
}

/// Standard sampling of `n_frames` frames from seeded noise. Frame i starts
/// from substream (seed, Latent, first_frame + i), so a block sampled in
/// pieces draws the same noise as one sampled whole.
inline std::vector<float> batch_sample(std::size_t n_frames, const TimestepSchedule& tsched,
                                       const SamplerContext& ctx, std::uint64_t seed,
                                       std::uint64_t first_frame = 0) {
  if (n_frames < 1) throw Error(Errc::InvalidCount, "batch_sample needs at least one frame");
  const std::size_t fs = ctx.shape.frame_size();
  TrackedBuffer<float> latents(n_frames * fs, ctx.meter);
  for (std::size_t i = 0; i < n_frames; ++i)
    fill_standard_normal(latents.span().subspan(i * fs, fs), seed, NoisePurpose::Latent,
                         first_frame + i);
  return batch_sample_from(std::move(latents), tsched, ctx);
}

}  // namespace infaudio
