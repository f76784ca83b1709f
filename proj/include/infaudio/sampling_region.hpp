// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "infaudio/error.hpp"

namespace infaudio {

/// Stage of the sampling trajectory. Initial is the noisy start (timesteps
/// near M), Final the nearly clean end (timesteps near 1).
enum class SamplingRegion { Initial, Middle, Final };

constexpr std::string_view to_string(SamplingRegion r) {
  switch (r) {
    case SamplingRegion::Initial: return "initial";
    case SamplingRegion::Middle: return "middle";
    case SamplingRegion::Final: return "final";
  }
  return "?";
}

inline std::optional<SamplingRegion> parse_region(std::string_view s) {
  if (s == "initial") return SamplingRegion::Initial;
  if (s == "middle") return SamplingRegion::Middle;
  if (s == "final") return SamplingRegion::Final;
  return std::nullopt;
}

/// Share of the trajectory assigned to each region, listed noisy end first.
struct RegionFractions {
  double initial = 1.0 / 3.0;
  double middle = 1.0 / 3.0;
  double final = 1.0 / 3.0;

  void validate() const {
    if (!(initial > 0.0) || !(middle > 0.0) || !(final > 0.0))
      throw Error(Errc::InvalidFractions, "every region fraction must be positive");
    if (std::abs(initial + middle + final - 1.0) > 1e-9)
      throw Error(Errc::InvalidFractions, "region fractions must sum to 1");
  }
};

/// Mean attention mass directed at the keys of each sampling region.
struct AttentionProfile {
  double initial = 0.0;
  double middle = 0.0;
  double final = 0.0;

  double score(SamplingRegion r) const {
    switch (r) {
      case SamplingRegion::Initial: return initial;
      case SamplingRegion::Middle: return middle;
      case SamplingRegion::Final: return final;
    }
    return 0.0;
  }

  bool valid() const {
    for (double v : {initial, middle, final})
      if (!std::isfinite(v) || v < 0.0) return false;
    return true;
  }

  bool degenerate() const { return initial == 0.0 && middle == 0.0 && final == 0.0; }
};

struct FocusDecision {
  SamplingRegion region = SamplingRegion::Middle;
  bool tied = false;  // the maximum was shared by two or more regions
};

/// Argmax region of the profile. Exact ties resolve Middle > Final > Initial.
inline FocusDecision recommend_focus(const AttentionProfile& profile) {
  if (!profile.valid())
    throw Error(Errc::InvalidArgument, "attention profile scores must be finite and nonnegative");
  constexpr SamplingRegion kPriority[] = {SamplingRegion::Middle, SamplingRegion::Final,
                                          SamplingRegion::Initial};
  FocusDecision best{kPriority[0], false};
  double best_score = profile.score(kPriority[0]);
  for (int i = 1; i < 3; ++i) {
    const double s = profile.score(kPriority[i]);
    if (s > best_score) {
      best = {kPriority[i], false};
      best_score = s;
    } else if (s == best_score) {
      best.tied = true;
    }
  }
  return best;
}

}  // namespace infaudio
