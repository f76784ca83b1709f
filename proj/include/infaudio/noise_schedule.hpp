// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "infaudio/error.hpp"

namespace infaudio {

/// Diffusion timestep of a single frame: 1..M, or the distinct Clean state
/// of a fully denoised frame. Clean is not "timestep 0"; it has no schedule
/// coefficients of its own and reads as alpha_bar = 1.
class Tau {
 public:
  constexpr Tau() noexcept = default;
  constexpr explicit Tau(std::int32_t value) noexcept : value_(value) {}

  static constexpr Tau clean() noexcept { return Tau{}; }

  constexpr bool is_clean() const noexcept { return value_ == 0; }
  constexpr std::int32_t value() const noexcept { return value_; }

  friend constexpr auto operator<=>(Tau, Tau) noexcept = default;

 private:
  std::int32_t value_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, Tau t) {
  if (t.is_clean()) return os << "clean";
  return os << t.value();
}

/// Linear beta schedule and cumulative alpha_bar, indexed 1..M.
class NoiseSchedule {
 public:
  static constexpr std::int32_t kDefaultSteps = 1000;
  static constexpr double kDefaultBetaStart = 1e-4;
  static constexpr double kDefaultBetaEnd = 2e-2;

  static NoiseSchedule linear(std::int32_t steps = kDefaultSteps,
                              double beta_start = kDefaultBetaStart,
                              double beta_end = kDefaultBetaEnd) {
    if (steps < 1)
      throw Error(Errc::InvalidRange, "schedule needs at least one timestep");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
      throw Error(Errc::InvalidRange, "require 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.beta_.resize(static_cast<std::size_t>(steps));
    s.alpha_bar_.resize(static_cast<std::size_t>(steps));
    double running = 1.0;
    for (std::int32_t k = 0; k < steps; ++k) {
      const double frac = steps == 1 ? 0.0 : static_cast<double>(k) / (steps - 1);
      const double beta = beta_start + (beta_end - beta_start) * frac;
      const double next = running * (1.0 - beta);
      if (!(next > 0.0) || !(next < running))
        throw Error(Errc::InvalidRange, "alpha_bar stops decreasing at tau " + std::to_string(k + 1));
      running = next;
      s.beta_[k] = beta;
      s.alpha_bar_[k] = running;
    }
    return s;
  }

  std::int32_t steps() const noexcept { return static_cast<std::int32_t>(beta_.size()); }

  double beta(std::int32_t tau) const { return beta_[index(tau)]; }
  double alpha_bar(std::int32_t tau) const { return alpha_bar_[index(tau)]; }

  /// alpha_bar for a frame state; Clean frames are noiseless.
  double alpha_bar(Tau tau) const { return tau.is_clean() ? 1.0 : alpha_bar(tau.value()); }

  bool contains(Tau tau) const noexcept {
    return tau.is_clean() || (tau.value() >= 1 && tau.value() <= steps());
  }

  /// Header `tau,beta,alpha_bar`, one row per timestep, round-trippable doubles.
  void write_csv(std::ostream& os) const {
    os << "tau,beta,alpha_bar\n";
    char line[96];
    for (std::int32_t t = 1; t <= steps(); ++t) {
      std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", t, beta(t), alpha_bar(t));
      os << line;
    }
  }

 private:
  NoiseSchedule() = default;

  std::size_t index(std::int32_t tau) const {
    if (tau < 1 || tau > steps())
      throw Error(Errc::TimestepOutOfRange,
                  "timestep " + std::to_string(tau) + " outside [1.." + std::to_string(steps()) + "]");
    return static_cast<std::size_t>(tau - 1);
  }

  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

namespace detail {

template <typename T>
void forward_perturb_impl(std::span<const T> x0, std::int32_t tau, std::span<const T> eps,
                          const NoiseSchedule& sched, std::span<T> out) {
  if (x0.size() != eps.size() || out.size() != x0.size())
    throw Error(Errc::ShapeMismatch, "x0, eps and output must have the same size");
  const double ab = sched.alpha_bar(tau);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  for (std::size_t i = 0; i < x0.size(); ++i)
    out[i] = static_cast<T>(signal * x0[i] + noise * eps[i]);
}

}  // namespace detail

/// z = sqrt(alpha_bar) * x0 + sqrt(1 - alpha_bar) * eps, written to `out`.
/// Frames are float; the double overloads serve precision checks.
inline void forward_perturb(std::span<const float> x0, std::int32_t tau, std::span<const float> eps,
                            const NoiseSchedule& sched, std::span<float> out) {
  detail::forward_perturb_impl(x0, tau, eps, sched, out);
}

inline void forward_perturb(std::span<const double> x0, std::int32_t tau, std::span<const double> eps,
                            const NoiseSchedule& sched, std::span<double> out) {
  detail::forward_perturb_impl(x0, tau, eps, sched, out);
}

inline std::vector<float> forward_perturb(std::span<const float> x0, std::int32_t tau,
                                          std::span<const float> eps, const NoiseSchedule& sched) {
  std::vector<float> out(x0.size());
  forward_perturb(x0, tau, eps, sched, out);
  return out;
}

inline std::vector<double> forward_perturb(std::span<const double> x0, std::int32_t tau,
                                           std::span<const double> eps, const NoiseSchedule& sched) {
  std::vector<double> out(x0.size());
  forward_perturb(x0, tau, eps, sched, out);
  return out;
}

}  // namespace infaudio
