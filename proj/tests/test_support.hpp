// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

// Independent oracles used by the test suites. Nothing here calls into the
// code paths it is used to check.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "infaudio/frame_stream.hpp"
#include "infaudio/gaussian_process.hpp"
#include "infaudio/noise_schedule.hpp"
#include "infaudio/timestep_plan.hpp"

namespace infaudio::testing {

/// Solves A x = b by Gaussian elimination with partial pivoting (A is n x n,
/// row-major, taken by value).
inline std::vector<long double> dense_solve(std::vector<long double> a, std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
    if (a[pivot * n + col] == 0.0L) throw std::runtime_error("singular oracle system");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const long double f = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i * n + c] * x[c];
    x[i] = acc / a[i * n + i];
  }
  return x;
}

/// Brute-force Gaussian conditioning for one feature series: builds the joint
/// covariance of (x, z) explicitly, with z_i = a_i x_i + sqrt(s_i) eps_i, and
/// returns E[eps | z] for every noisy frame (0 for Clean frames).
inline std::vector<double> dense_conditioning_eps(std::span<const double> z, std::span<const Tau> taus,
                                                  double mu, double variance, double rho,
                                                  const NoiseSchedule& sched) {
  const std::size_t L = z.size();
  std::vector<long double> a(L), s(L);
  for (std::size_t i = 0; i < L; ++i) {
    const long double ab = taus[i].is_clean() ? 1.0L : static_cast<long double>(sched.alpha_bar(taus[i].value()));
    a[i] = std::sqrt(ab);
    s[i] = 1.0L - ab;
  }
  // Joint vector w = (x_1..x_L, z_1..z_L).
  auto cov_x = [&](std::size_t i, std::size_t j) {
    return static_cast<long double>(variance) *
           std::pow(static_cast<long double>(rho), static_cast<long double>(i > j ? i - j : j - i));
  };
  std::vector<long double> czz(L * L), cxz(L * L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      czz[i * L + j] = a[i] * a[j] * cov_x(i, j) + (i == j ? s[i] : 0.0L);
      cxz[i * L + j] = cov_x(i, j) * a[j];  // Cov(x_i, z_j)
    }
  std::vector<long double> resid(L);
  for (std::size_t i = 0; i < L; ++i) resid[i] = z[i] - a[i] * mu;
  const auto w = dense_solve(czz, resid);
  std::vector<double> eps(L, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    if (taus[i].is_clean()) continue;
    long double x_hat = mu;
    for (std::size_t j = 0; j < L; ++j) x_hat += cxz[i * L + j] * w[j];
    eps[i] = static_cast<double>((z[i] - a[i] * x_hat) / std::sqrt(s[i]));
  }
  return eps;
}

/// Exact mean and variance of a single frame-local DDIM trajectory when the
/// data are N(mu, variance) and the predictor is the exact posterior. The
/// map z -> z' is affine per step, so the moments propagate in closed form.
struct ChainMoments {
  double mean;
  double variance;
};

inline ChainMoments frame_local_chain_moments(const TimestepSchedule& tsched, const NoiseSchedule& sched,
                                              double mu, double variance) {
  long double m = 0.0L, v = 1.0L;  // z at t_1 is standard normal
  for (std::size_t k = 0; k < tsched.size(); ++k) {
    const long double ab = sched.alpha_bar(tsched[k]);
    const long double ab_next = k + 1 < tsched.size() ? sched.alpha_bar(tsched[k + 1]) : 1.0L;
    const long double a = std::sqrt(ab), s = 1.0L - ab;
    const long double gain = variance * a / (a * a * variance + s);
    // x0_hat = mu + gain (z - a mu); eps_hat = (z - a x0_hat) / sqrt(s)
    const long double x_slope = gain, x_icpt = mu - gain * a * mu;
    const long double e_slope = (1.0L - a * x_slope) / std::sqrt(s);
    const long double e_icpt = -a * x_icpt / std::sqrt(s);
    long double slope, icpt;
    if (ab_next == 1.0L) {
      slope = x_slope;
      icpt = x_icpt;
    } else {
      const long double an = std::sqrt(ab_next), sn = std::sqrt(1.0L - ab_next);
      slope = an * x_slope + sn * e_slope;
      icpt = an * x_icpt + sn * e_icpt;
    }
    m = slope * m + icpt;
    v = slope * slope * v;
  }
  return {static_cast<double>(m), static_cast<double>(v)};
}

/// Direct forward simulation of the stationary AR(1) process, per feature.
inline FrameStream simulate_ar1(std::size_t frames, FrameShape shape, double mu, double variance, double rho,
                                std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  FrameStream s{shape, std::vector<float>(frames * shape.frame_size())};
  const std::size_t fs = shape.frame_size();
  const double sd = std::sqrt(variance);
  const double innov = sd * std::sqrt(1.0 - rho * rho);
  std::vector<double> state(fs);
  for (auto& x : state) x = sd * normal(gen);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < fs; ++k) {
      if (t > 0) state[k] = rho * state[k] + innov * normal(gen);
      s.values[t * fs + k] = static_cast<float>(mu + state[k]);
    }
  }
  return s;
}

/// Sample mean and (population) variance of a flat series.
struct Moments {
  double mean;
  double variance;
};

inline Moments moments(std::span<const float> xs) {
  long double sum = 0.0L;
  for (float x : xs) sum += x;
  const long double mean = sum / xs.size();
  long double sq = 0.0L;
  for (float x : xs) sq += (x - mean) * (x - mean);
  return {static_cast<double>(mean), static_cast<double>(sq / xs.size())};
}

/// Scratch file path unique to the running test binary.
inline std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "infaudio_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace infaudio::testing
