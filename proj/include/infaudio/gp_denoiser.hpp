// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "infaudio/denoiser.hpp"
#include "infaudio/error.hpp"
#include "infaudio/gaussian_process.hpp"
#include "infaudio/noise_schedule.hpp"

namespace infaudio {

/// Exact conditional-expectation noise predictor for data drawn from a
/// GaussianProcessSpec. With z_i = a_i x_i + sqrt(s_i) eps_i,
/// a_i = sqrt(alpha_bar(tau_i)), s_i = 1 - alpha_bar(tau_i):
///
///   E[x | z] = mu + Sigma A (A Sigma A + S)^-1 (z - A mu)
///   eps_i    = (z_i - a_i E[x | z]_i) / sqrt(s_i)
///
/// Clean frames are observed without noise (a = 1, s = 0) and get eps = 0.
/// The gain matrix Sigma A K^-1 depends only on the taus vector, so it is
/// memoized per distinct vector.
class GaussianProcessConditioner {
 public:
  explicit GaussianProcessConditioner(GaussianProcessSpec spec,
                                      std::size_t cache_budget_bytes = std::size_t{256} << 20)
      : spec_(std::move(spec)), cache_budget_(cache_budget_bytes) {}

  const GaussianProcessSpec& spec() const noexcept { return spec_; }

  std::vector<double> predict(const FrameWindow& window, const NoiseSchedule& sched) const {
    window.validate(sched);
    spec_.validate(window.shape.freq_bins);
    const std::size_t L = window.length();
    const std::size_t fs = window.shape.frame_size();
    const std::size_t bins = window.shape.freq_bins;

    std::vector<double> a(L), s(L);
    for (std::size_t i = 0; i < L; ++i) {
      const double ab = sched.alpha_bar(window.taus[i]);
      a[i] = std::sqrt(ab);
      s[i] = 1.0 - ab;
      if (!window.taus[i].is_clean() && !(s[i] > 0.0))
        throw Error(Errc::InvalidArgument, "noisy frame with zero noise variance");
    }

    std::vector<double> eps(L * fs, 0.0);
    if (spec_.mode == CorrelationMode::FrameLocal) {
      const double var = spec_.variance;
      for (std::size_t i = 0; i < L; ++i) {
        if (window.taus[i].is_clean()) continue;
        const double gain = var * a[i] / (a[i] * a[i] * var + s[i]);
        const double inv_noise = 1.0 / std::sqrt(s[i]);
        for (std::size_t k = 0; k < fs; ++k) {
          const double mu = spec_.mean_at(k % bins);
          const double z = window.values[i * fs + k];
          const double x_hat = mu + gain * (z - a[i] * mu);
          eps[i * fs + k] = (z - a[i] * x_hat) * inv_noise;
        }
      }
      return eps;
    }

    const auto gain = gain_matrix(window.taus, a, s);
    Eigen::MatrixXd centered(L, fs);
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t k = 0; k < fs; ++k)
        centered(i, k) = window.values[i * fs + k] - a[i] * spec_.mean_at(k % bins);
    const Eigen::MatrixXd x_dev = *gain * centered;
    for (std::size_t i = 0; i < L; ++i) {
      if (window.taus[i].is_clean()) continue;
      const double inv_noise = 1.0 / std::sqrt(s[i]);
      for (std::size_t k = 0; k < fs; ++k) {
        const double x_hat = spec_.mean_at(k % bins) + x_dev(i, k);
        eps[i * fs + k] = (window.values[i * fs + k] - a[i] * x_hat) * inv_noise;
      }
    }
    return eps;
  }

 private:
  using Gain = std::shared_ptr<const Eigen::MatrixXd>;

  Gain gain_matrix(std::span<const Tau> taus, const std::vector<double>& a,
                   const std::vector<double>& s) const {
    std::vector<std::int32_t> key(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) key[i] = taus[i].value();
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }

    const auto L = static_cast<Eigen::Index>(taus.size());
    Eigen::MatrixXd cov(L, L);
    for (Eigen::Index i = 0; i < L; ++i)
      for (Eigen::Index j = 0; j < L; ++j)
        cov(i, j) = spec_.variance * std::pow(spec_.rho, static_cast<double>(std::abs(i - j)));
    const Eigen::Map<const Eigen::VectorXd> av(a.data(), L);
    const Eigen::Map<const Eigen::VectorXd> sv(s.data(), L);

    // K = A Sigma A + S; gain = Sigma A K^-1 = (K^-1 A Sigma)^T.
    Eigen::MatrixXd system = av.asDiagonal() * cov * av.asDiagonal();
    system.diagonal() += sv;
    const Eigen::LLT<Eigen::MatrixXd> chol(system);
    if (chol.info() != Eigen::Success)
      throw Error(Errc::SingularSystem, "GP observation covariance is not positive definite");
    const Eigen::MatrixXd rhs = av.asDiagonal() * cov;
    auto gain = std::make_shared<const Eigen::MatrixXd>(chol.solve(rhs).transpose());

    std::lock_guard lock(mutex_);
    const std::size_t bytes = static_cast<std::size_t>(L * L) * sizeof(double);
    if (cached_bytes_ + bytes > cache_budget_) {
      cache_.clear();
      cached_bytes_ = 0;
    }
    if (bytes <= cache_budget_) {
      cache_.emplace(std::move(key), gain);
      cached_bytes_ += bytes;
    }
    return gain;
  }

  GaussianProcessSpec spec_;
  std::size_t cache_budget_;
  mutable std::mutex mutex_;
  mutable std::map<std::vector<std::int32_t>, Gain> cache_;
  mutable std::size_t cached_bytes_ = 0;
};

/// Exact GP noise prediction in double precision (no memoization).
inline std::vector<double> gp_predict_eps(const FrameWindow& window, const GaussianProcessSpec& spec,
                                          const NoiseSchedule& sched) {
  return GaussianProcessConditioner(spec, 0).predict(window, sched);
}

/// Denoiser adapter over GaussianProcessConditioner; the predicted noise is
/// rounded to the 32-bit frame type.
class GaussianProcessDenoiser final : public Denoiser {
 public:
  explicit GaussianProcessDenoiser(GaussianProcessSpec spec) : conditioner_(std::move(spec)) {}

  const GaussianProcessSpec& spec() const noexcept { return conditioner_.spec(); }

  void predict_eps_into(const FrameWindow& window, const NoiseSchedule& sched,
                        std::span<float> eps) const override {
    if (eps.size() != window.values.size())
      throw Error(Errc::ShapeMismatch, "eps buffer does not match window");
    const auto exact = conditioner_.predict(window, sched);
    for (std::size_t i = 0; i < exact.size(); ++i) eps[i] = static_cast<float>(exact[i]);
  }

 private:
  GaussianProcessConditioner conditioner_;
};

}  // namespace infaudio
