// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "infaudio/error.hpp"

namespace infaudio {

enum class CorrelationMode { FrameLocal, AR1 };

/// Stationary Gaussian process along the frame axis, independent per
/// (channel, frequency) feature: mean mu[f], covariance sigma^2 rho^|i-j|.
/// FrameLocal ignores rho and treats frames as independent.
struct GaussianProcessSpec {
  std::vector<double> mean{0.0};  // one entry, or one per frequency bin
  double variance = 1.0;
  double rho = 0.0;
  CorrelationMode mode = CorrelationMode::FrameLocal;

  static GaussianProcessSpec frame_local(double mu = 0.0, double variance = 1.0) {
    return {{mu}, variance, 0.0, CorrelationMode::FrameLocal};
  }
  static GaussianProcessSpec ar1(double rho, double mu = 0.0, double variance = 1.0) {
    return {{mu}, variance, rho, CorrelationMode::AR1};
  }

  void validate(std::size_t freq_bins) const {
    if (!(variance > 0.0) || !std::isfinite(variance))
      throw Error(Errc::InvalidArgument, "GP variance must be positive");
    if (!(rho >= 0.0 && rho < 1.0)) throw Error(Errc::InvalidArgument, "GP rho must lie in [0, 1)");
    if (mean.size() != 1 && mean.size() != freq_bins)
      throw Error(Errc::ShapeMismatch, "GP mean needs one entry or one per frequency bin");
    for (double m : mean)
      if (!std::isfinite(m)) throw Error(Errc::InvalidArgument, "GP mean must be finite");
  }

  double mean_at(std::size_t freq_bin) const {
    return mean.size() == 1 ? mean.front() : mean[freq_bin];
  }

  double effective_rho() const { return mode == CorrelationMode::AR1 ? rho : 0.0; }
};

}  // namespace infaudio
