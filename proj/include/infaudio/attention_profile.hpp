// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "infaudio/error.hpp"
#include "infaudio/frame_stream.hpp"
#include "infaudio/sampling_region.hpp"
#include "infaudio/timestep_plan.hpp"

namespace infaudio {

/// Query x key self-attention scores over a frame window, row-major by query.
struct AttentionMap {
  std::uint32_t queries = 0;
  std::uint32_t keys = 0;
  std::vector<float> scores;

  float at(std::size_t q, std::size_t k) const { return scores[q * keys + k]; }
  float& at(std::size_t q, std::size_t k) { return scores[q * keys + k]; }

  static AttentionMap filled(std::uint32_t size, float value) {
    return {size, size, std::vector<float>(std::size_t{size} * size, value)};
  }
};

// IAAM layout (little-endian): "IAAM", u32 version = 1, u32 Q, u32 K,
// then Q*K f32 scores, query-major.
inline constexpr std::array<char, 4> kAttentionMagic{'I', 'A', 'A', 'M'};
inline constexpr std::uint32_t kAttentionVersion = 1;

inline void validate_attention_map(const AttentionMap& map) {
  if (map.queries != map.keys) throw Error(Errc::BadShape, "attention map must be square (Q == K)");
  if (map.scores.size() != std::size_t{map.queries} * map.keys)
    throw Error(Errc::BadShape, "attention scores do not match Q x K");
  for (float v : map.scores) {
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "attention map holds a non-finite score");
    if (v < 0.0f) throw Error(Errc::InvalidArgument, "attention map holds a negative score");
  }
}

inline AttentionMap parse_attention_map(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kAttentionMagic.data(), 4) != 0)
    throw Error(Errc::BadMagic, "not an IAAM attention map");
  if (bytes.size() < 16) throw Error(Errc::TruncatedFile, "IAAM header is incomplete");
  if (le::get_u32(bytes.data() + 4) != kAttentionVersion)
    throw Error(Errc::BadMagic, "unsupported IAAM version");
  AttentionMap map;
  map.queries = le::get_u32(bytes.data() + 8);
  map.keys = le::get_u32(bytes.data() + 12);
  const std::uint64_t count = std::uint64_t{map.queries} * map.keys;
  const std::uint64_t payload = bytes.size() - 16;
  if (payload < count * 4) throw Error(Errc::TruncatedFile, "IAAM payload is shorter than Q x K");
  if (payload > count * 4) throw Error(Errc::CountMismatch, "IAAM payload is longer than Q x K");
  if (map.queries != map.keys) throw Error(Errc::BadShape, "attention map must be square (Q == K)");
  map.scores.resize(count);
  le::get_f32s(bytes.data() + 16, map.scores);
  validate_attention_map(map);
  return map;
}

inline AttentionMap load_attention_map(const std::filesystem::path& path) {
  const auto bytes = le::read_file(path);
  return parse_attention_map(bytes);
}

inline std::vector<std::uint8_t> serialize_attention_map(const AttentionMap& map) {
  std::vector<std::uint8_t> bytes(16 + map.scores.size() * 4);
  std::memcpy(bytes.data(), kAttentionMagic.data(), 4);
  le::put_u32(bytes.data() + 4, kAttentionVersion);
  le::put_u32(bytes.data() + 8, map.queries);
  le::put_u32(bytes.data() + 12, map.keys);
  le::put_f32s(map.scores, bytes.data() + 16);
  return bytes;
}

inline void write_attention_map(const std::filesystem::path& path, const AttentionMap& map) {
  const auto bytes = serialize_attention_map(map);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
}

/// Half-open key index ranges [begin, end) for each sampling region.
struct KeyRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t width() const noexcept { return end > begin ? end - begin : 0; }
};

struct KeyRegionBounds {
  KeyRange final;    // keys right after the buffer: most denoised frames
  KeyRange middle;
  KeyRange initial;  // tail keys: noisiest frames
};

/// Splits the post-buffer keys with the same rule region_bounds applies to
/// timesteps; key offset 0 (next to the buffer) plays the role of timestep 1.
inline KeyRegionBounds key_region_bounds(std::size_t keys, std::size_t buffer_len,
                                         const RegionFractions& fractions = {}) {
  if (buffer_len >= keys) throw Error(Errc::InvalidArgument, "buffer covers the whole window");
  const auto span = static_cast<std::int32_t>(keys - buffer_len);
  if (span < 3) throw Error(Errc::EmptyRegion, "fewer than three keys beyond the buffer");
  const RegionBounds r = region_bounds(span, fractions);
  auto to_keys = [&](const TimestepRange& t) {
    return KeyRange{buffer_len + static_cast<std::size_t>(t.lo - 1),
                    buffer_len + static_cast<std::size_t>(t.hi)};
  };
  return {to_keys(r.final), to_keys(r.middle), to_keys(r.initial)};
}

/// Mean score over all post-buffer queries and the keys of each region.
/// Buffer rows and columns are never read.
inline AttentionProfile region_scores(const AttentionMap& map, std::size_t buffer_len,
                                      const KeyRegionBounds& bounds) {
  validate_attention_map(map);
  if (buffer_len >= map.queries) throw Error(Errc::InvalidArgument, "buffer covers the whole window");
  auto mean_over = [&](const KeyRange& keys) {
    if (keys.width() == 0) throw Error(Errc::EmptyRegion, "key region has zero width");
    if (keys.begin < buffer_len || keys.end > map.keys)
      throw Error(Errc::InvalidArgument, "key region outside the post-buffer window");
    double sum = 0.0;
    for (std::size_t q = buffer_len; q < map.queries; ++q)
      for (std::size_t k = keys.begin; k < keys.end; ++k) sum += map.at(q, k);
    return sum / (static_cast<double>(map.queries - buffer_len) * static_cast<double>(keys.width()));
  };
  AttentionProfile p;
  p.final = mean_over(bounds.final);
  p.middle = mean_over(bounds.middle);
  p.initial = mean_over(bounds.initial);
  return p;
}

inline AttentionProfile region_scores(const AttentionMap& map, std::size_t buffer_len,
                                      const RegionFractions& fractions = {}) {
  return region_scores(map, buffer_len, key_region_bounds(map.keys, buffer_len, fractions));
}

/// `region,score` rows (initial, middle, final) followed by `focus,<region>`.
inline void write_attention_report(std::ostream& os, const AttentionProfile& profile,
                                   const FocusDecision& decision) {
  char line[80];
  os << "region,score\n";
  for (SamplingRegion r : {SamplingRegion::Initial, SamplingRegion::Middle, SamplingRegion::Final}) {
    std::snprintf(line, sizeof line, "%s,%.17g\n", std::string(to_string(r)).c_str(), profile.score(r));
    os << line;
  }
  os << "focus," << to_string(decision.region) << '\n';
}

}  // namespace infaudio
