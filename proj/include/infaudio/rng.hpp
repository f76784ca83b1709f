// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>

namespace infaudio {

// All randomness derives from one 64-bit seed. A (seed, purpose, index)
// triple names an independent substream, so any frame's noise can be
// regenerated without replaying the ones before it.
//
//   key     = mix(mix(mix(seed) ^ purpose) ^ index)
//   u64[i]  = mix(key + (i + 1) * 0x9E3779B97F4A7C15)
//   normal  = Box-Muller on consecutive (u64[2k], u64[2k+1]) pairs
//
// mix is the splitmix64 finalizer. The rule is part of the file-level
// reproducibility contract; do not change it.

enum class NoisePurpose : std::uint64_t {
  Latent = 1,   // initial latents of batch/concat sampling, per global frame
  Primer = 2,   // primer batch that seeds the FIFO queue
  Renoise = 3,  // forward-perturbation noise for initial diagonal frames
  Fresh = 4,    // noise frames enqueued at the tail during FIFO steps
  Test = 99,
};

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t substream_key(std::uint64_t seed, NoisePurpose purpose,
                                      std::uint64_t index) noexcept {
  return mix64(mix64(mix64(seed) ^ static_cast<std::uint64_t>(purpose)) ^ index);
}

class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, NoisePurpose purpose, std::uint64_t index) noexcept
      : key_(substream_key(seed, purpose, index)) {}

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ull);
  }

  // Uniform in (0, 1]; never zero so log() is safe.
  double next_uniform() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename T>
  void fill_normal(std::span<T> out) noexcept {
    for (auto& v : out) v = static_cast<T>(next_normal());
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Fills one frame with the standard-normal noise of substream (seed, purpose, index).
template <typename T>
void fill_standard_normal(std::span<T> out, std::uint64_t seed, NoisePurpose purpose,
                          std::uint64_t index) noexcept {
  NoiseStream stream(seed, purpose, index);
  stream.fill_normal(out);
}

}  // namespace infaudio
