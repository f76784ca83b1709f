// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "infaudio/error.hpp"
#include "infaudio/sampling_region.hpp"

namespace infaudio {

/// Inclusive timestep range [lo..hi]. Empty when hi < lo.
struct TimestepRange {
  std::int32_t lo = 1;
  std::int32_t hi = 0;

  std::int32_t size() const noexcept { return hi >= lo ? hi - lo + 1 : 0; }
  bool contains(std::int32_t t) const noexcept { return t >= lo && t <= hi; }
  friend bool operator==(const TimestepRange&, const TimestepRange&) = default;
};

struct RegionBounds {
  TimestepRange initial;
  TimestepRange middle;
  TimestepRange final;

  SamplingRegion region_of(std::int32_t t) const noexcept {
    if (t <= final.hi) return SamplingRegion::Final;
    if (t <= middle.hi) return SamplingRegion::Middle;
    return SamplingRegion::Initial;
  }

  const TimestepRange& range(SamplingRegion r) const noexcept {
    switch (r) {
      case SamplingRegion::Initial: return initial;
      case SamplingRegion::Middle: return middle;
      case SamplingRegion::Final: return final;
    }
    return middle;
  }
};

/// Splits [1..M] into Final (lowest), Middle, Initial (highest) ranges.
/// Boundaries are cumulative fractions counted from the clean end and
/// rounded up, so with equal thirds the Final region takes the remainder
/// (M=250 gives Final 84, Middle 83, Initial 83).
inline RegionBounds region_bounds(std::int32_t steps, const RegionFractions& fractions = {}) {
  fractions.validate();
  if (steps < 3) throw Error(Errc::InvalidCount, "need at least 3 timesteps for three regions");
  auto cumulative_ceil = [&](double share) {
    const double x = steps * share;
    return static_cast<std::int32_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
  };
  const std::int32_t final_hi = std::clamp(cumulative_ceil(fractions.final), 1, steps - 2);
  const std::int32_t middle_hi =
      std::clamp(cumulative_ceil(fractions.final + fractions.middle), final_hi + 1, steps - 1);
  return RegionBounds{{middle_hi + 1, steps}, {final_hi + 1, middle_hi}, {1, final_hi}};
}

/// A strictly decreasing sampling trajectory t_1 = M > ... > t_n = 1.
struct TimestepSchedule {
  std::int32_t total_steps = 0;  // M of the underlying noise schedule
  std::vector<std::int32_t> steps;
  std::vector<SamplingRegion> regions;  // region of each step
  std::int32_t skip_factor = 1;
  std::optional<SamplingRegion> focus;
  bool focus_tied = false;          // focus came from a tie in the attention profile
  bool degenerate_profile = false;  // all-zero profile; equally spaced fallback

  std::size_t size() const noexcept { return steps.size(); }
  std::int32_t operator[](std::size_t k) const { return steps[k]; }

  /// Throws InvalidArgument unless the trajectory is strictly decreasing
  /// inside [1..M]. Samplers accept truncated trajectories (e.g. a lone [M]);
  /// everything built by this header also satisfies the endpoint check.
  void validate(bool require_endpoints = true) const {
    if (steps.size() < 1) throw Error(Errc::InvalidArgument, "empty timestep schedule");
    if (regions.size() != steps.size())
      throw Error(Errc::InvalidArgument, "region labels do not match steps");
    if (steps.front() > total_steps || steps.back() < 1)
      throw Error(Errc::InvalidArgument, "schedule leaves [1..M]");
    if (require_endpoints && (steps.front() != total_steps || steps.back() != 1))
      throw Error(Errc::InvalidArgument, "schedule must start at M and end at 1");
    for (std::size_t k = 1; k < steps.size(); ++k)
      if (steps[k] >= steps[k - 1])
        throw Error(Errc::InvalidArgument, "schedule must be strictly decreasing");
  }
};

namespace detail {

inline std::vector<SamplingRegion> label_by_timestep(std::span<const std::int32_t> steps,
                                                     std::int32_t total,
                                                     const RegionFractions& fractions) {
  std::vector<SamplingRegion> labels(steps.size(), SamplingRegion::Final);
  if (total < 3) {
    for (std::size_t k = 0; k < steps.size(); ++k)
      labels[k] = steps[k] == total && total > 1 ? SamplingRegion::Initial : SamplingRegion::Final;
    return labels;
  }
  const RegionBounds bounds = region_bounds(total, fractions);
  for (std::size_t k = 0; k < steps.size(); ++k) labels[k] = bounds.region_of(steps[k]);
  return labels;
}

}  // namespace detail

/// Rounded linspace from M down to 1 with exactly n entries (round half up).
inline TimestepSchedule equally_spaced(std::int32_t total, std::int32_t n,
                                       const RegionFractions& fractions = {}) {
  if (n < 2 || n > total)
    throw Error(Errc::InvalidCount, "equally spaced schedule needs 2 <= n <= M");
  TimestepSchedule s;
  s.total_steps = total;
  s.steps.resize(static_cast<std::size_t>(n));
  const double span = static_cast<double>(total - 1);
  for (std::int32_t k = 0; k < n; ++k) {
    const double t = total - span * k / (n - 1);
    s.steps[k] = static_cast<std::int32_t>(std::floor(t + 0.5));
  }
  s.steps.front() = total;
  s.steps.back() = 1;
  s.regions = detail::label_by_timestep(s.steps, total, fractions);
  return s;
}

/// Wraps a hand-written trajectory; only monotonicity and range are enforced.
inline TimestepSchedule custom_schedule(std::vector<std::int32_t> steps, std::int32_t total,
                                        const RegionFractions& fractions = {}) {
  TimestepSchedule s;
  s.total_steps = total;
  s.regions = detail::label_by_timestep(steps, total, fractions);
  s.steps = std::move(steps);
  s.validate(false);
  return s;
}

/// Region-focused decimation of an arbitrary base trajectory.
///
/// Regions are assigned over base *positions* (position p = 1 is the base's
/// last entry, timestep 1). The focused region keeps every base step; every
/// other region keeps each P-th step counted from its noisy end, so each
/// region's first kept step is its boundary step. The endpoints M and 1 are
/// always kept.
inline TimestepSchedule curved_schedule(std::span<const std::int32_t> base, SamplingRegion focus,
                                        std::int32_t skip, const RegionFractions& fractions = {}) {
  if (skip < 1) throw Error(Errc::InvalidSkip, "skip factor P must be >= 1");
  const auto nb = static_cast<std::int32_t>(base.size());
  if (nb < 3) throw Error(Errc::InvalidCount, "base trajectory needs at least 3 steps");
  if (base.back() != 1)
    throw Error(Errc::InvalidArgument, "base trajectory must end at timestep 1");
  for (std::int32_t k = 1; k < nb; ++k)
    if (base[k] >= base[k - 1])
      throw Error(Errc::InvalidArgument, "base trajectory must be strictly decreasing");

  const RegionBounds bounds = region_bounds(nb, fractions);
  TimestepSchedule s;
  s.total_steps = base.front();
  s.skip_factor = skip;
  s.focus = focus;

  for (SamplingRegion r : {SamplingRegion::Initial, SamplingRegion::Middle, SamplingRegion::Final}) {
    const TimestepRange range = bounds.range(r);
    const std::int32_t stride = r == focus ? 1 : skip;
    std::int32_t taken = 0;
    for (std::int32_t p = range.hi; p >= range.lo; --p, ++taken) {
      const bool endpoint = p == nb || p == 1;
      if (taken % stride != 0 && !endpoint) continue;
      s.steps.push_back(base[nb - p]);
      s.regions.push_back(r);
    }
  }
  return s;
}

/// Region-focused schedule over the full trajectory M..1.
inline TimestepSchedule region_focused(std::int32_t total, SamplingRegion focus, std::int32_t skip,
                                       const RegionFractions& fractions = {}) {
  if (skip < 1) throw Error(Errc::InvalidSkip, "skip factor P must be >= 1");
  if (total < 3) throw Error(Errc::InvalidCount, "region focusing needs M >= 3");
  std::vector<std::int32_t> base(static_cast<std::size_t>(total));
  for (std::int32_t k = 0; k < total; ++k) base[k] = total - k;
  return curved_schedule(base, focus, skip, fractions);
}

/// Defaults of the curved sampler: a 250-step equally spaced base mapped
/// onto [1..M], equal thirds, P = 3. This lands at 140 steps for any focus.
struct CurvedPlanConfig {
  std::int32_t total_steps = 1000;
  std::int32_t base_steps = 250;
  std::int32_t skip = 3;
  RegionFractions fractions{};

  std::vector<std::int32_t> base() const {
    return equally_spaced(total_steps, std::min(base_steps, total_steps), fractions).steps;
  }
};

inline TimestepSchedule curved_schedule(SamplingRegion focus, const CurvedPlanConfig& cfg = {}) {
  const auto base = cfg.base();
  return curved_schedule(base, focus, cfg.skip, cfg.fractions);
}

/// Curved schedule focused on the profile's argmax region. An all-zero
/// profile falls back to an equally spaced schedule of the same length and
/// sets `degenerate_profile`; ties set `focus_tied`.
inline TimestepSchedule curved_from_profile(const AttentionProfile& profile,
                                            const CurvedPlanConfig& cfg = {}) {
  if (!profile.valid())
    throw Error(Errc::InvalidArgument, "attention profile scores must be finite and nonnegative");
  if (profile.degenerate()) {
    const auto reference = curved_schedule(SamplingRegion::Middle, cfg);
    TimestepSchedule s = equally_spaced(cfg.total_steps,
                                        static_cast<std::int32_t>(reference.size()), cfg.fractions);
    s.degenerate_profile = true;
    return s;
  }
  const FocusDecision decision = recommend_focus(profile);
  TimestepSchedule s = curved_schedule(decision.region, cfg);
  s.focus_tied = decision.tied;
  return s;
}

/// Overload over the raw trajectory M..1 (no base mapping).
inline TimestepSchedule curved_from_profile(const AttentionProfile& profile, std::int32_t total,
                                            std::int32_t skip,
                                            const RegionFractions& fractions = {}) {
  return curved_from_profile(profile, CurvedPlanConfig{total, total, skip, fractions});
}

// CSV interchange: header `index,tau,region`, index counts from 1.

inline void write_schedule_csv(std::ostream& os, const TimestepSchedule& s) {
  os << "index,tau,region\n";
  for (std::size_t k = 0; k < s.size(); ++k)
    os << (k + 1) << ',' << s.steps[k] << ',' << to_string(s.regions[k]) << '\n';
}

inline TimestepSchedule read_schedule_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("index,tau,region", 0) != 0)
    throw Error(Errc::InvalidArgument, "schedule CSV must start with header index,tau,region");
  TimestepSchedule s;
  std::size_t expected_index = 1;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string index, tau, region;
    if (!std::getline(row, index, ',') || !std::getline(row, tau, ',') || !std::getline(row, region))
      throw Error(Errc::InvalidArgument, "malformed schedule row: " + line);
    std::size_t parsed_index = 0;
    std::int32_t parsed_tau = 0;
    try {
      parsed_index = std::stoul(index);
      parsed_tau = std::stoi(tau);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, "non-numeric schedule row: " + line);
    }
    const auto r = parse_region(region);
    if (parsed_index != expected_index++ || !r)
      throw Error(Errc::InvalidArgument, "bad index or region in row: " + line);
    s.steps.push_back(parsed_tau);
    s.regions.push_back(*r);
  }
  if (s.steps.empty()) throw Error(Errc::InvalidArgument, "schedule CSV has no rows");
  s.total_steps = s.steps.front();
  s.validate();
  return s;
}

}  // namespace infaudio
