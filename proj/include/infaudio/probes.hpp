// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "infaudio/error.hpp"
#include "infaudio/frame_stream.hpp"
#include "infaudio/gaussian_process.hpp"

namespace infaudio {

// ---------------------------------------------------------------------------
// Spectrogram-style image

/// Grayscale pixels of a stream: width = frames, height = C * Fr. Column x is
/// frame x; row 0 is the last feature so feature index grows upward. Values
/// are min-max scaled to 0..255 (rounded); a constant stream maps to 128.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

inline GrayImage render_gray(const FrameStream& stream) {
  const std::size_t frames = stream.frame_count();
  if (frames == 0) throw Error(Errc::EmptyStream, "cannot render an empty stream");
  const std::size_t features = stream.shape.frame_size();
  const auto [lo_it, hi_it] = std::minmax_element(stream.values.begin(), stream.values.end());
  const double lo = *lo_it;
  const double range = static_cast<double>(*hi_it) - lo;

  GrayImage img{frames, features, std::vector<std::uint8_t>(frames * features)};
  for (std::size_t y = 0; y < features; ++y) {
    const std::size_t feature = features - 1 - y;
    for (std::size_t x = 0; x < frames; ++x) {
      const double v = stream.values[x * features + feature];
      const double level = range > 0.0 ? std::floor((v - lo) / range * 255.0 + 0.5) : 128.0;
      img.pixels[y * frames + x] = static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
    }
  }
  return img;
}

/// Writes a binary PGM (P5, maxval 255).
inline void emit_pgm(const FrameStream& stream, const std::filesystem::path& path) {
  const GrayImage img = render_gray(stream);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// Stream statistics against the GP targets

struct SeriesStats {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> autocorr;  // lag 1..K
};

struct StatsReport {
  std::vector<SeriesStats> channels;  // pooled over each channel's frequency bins
  SeriesStats overall;                // pooled over every feature
  std::size_t boundary_pairs = 0;
  std::size_t interior_pairs = 0;
  double boundary_msd = 0.0;  // mean squared adjacent difference across boundaries
  double interior_msd = 0.0;
  // Analytic targets of the GP spec.
  double target_mean = 0.0;
  double target_variance = 0.0;
  std::vector<double> target_autocorr;
  double target_interior_msd = 0.0;
  double target_boundary_msd = 0.0;

  double msd_ratio() const { return interior_msd > 0.0 ? boundary_msd / interior_msd : 0.0; }
};

/// Per-feature moments along the frame axis. Each feature is centered on its
/// own sample mean; lag-k autocorrelation is sum_t d_t d_{t+k} / sum_t d_t^2,
/// pooled over the features of a channel. `boundaries` lists frame indices i
/// where the pair (i-1, i) straddles a stitching boundary.
inline StatsReport stream_stats(const FrameStream& stream, const GaussianProcessSpec& spec,
                                std::span<const std::size_t> boundaries = {}, std::size_t max_lag = 8) {
  const std::size_t frames = stream.frame_count();
  if (frames < 2) throw Error(Errc::InvalidCount, "stream_stats needs at least two frames");
  const std::size_t C = stream.shape.channels;
  const std::size_t bins = stream.shape.freq_bins;
  const std::size_t fs = stream.shape.frame_size();
  const std::size_t K = std::min(max_lag, frames - 1);

  struct Accum {
    double sum = 0.0, sq = 0.0;
    std::vector<double> cross;
    std::size_t count = 0;
  };
  std::vector<Accum> per_channel(C, Accum{0, 0, std::vector<double>(K, 0.0), 0});
  Accum all{0, 0, std::vector<double>(K, 0.0), 0};

  std::vector<double> centered(frames);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t f = 0; f < bins; ++f) {
      const std::size_t feat = c * bins + f;
      double mean = 0.0;
      for (std::size_t t = 0; t < frames; ++t) mean += stream.values[t * fs + feat];
      mean /= static_cast<double>(frames);
      double sq = 0.0;
      for (std::size_t t = 0; t < frames; ++t) {
        centered[t] = stream.values[t * fs + feat] - mean;
        sq += centered[t] * centered[t];
      }
      for (Accum* acc : {&per_channel[c], &all}) {
        acc->sum += mean * static_cast<double>(frames);
        acc->sq += sq;
        acc->count += frames;
      }
      for (std::size_t k = 1; k <= K; ++k) {
        double cross = 0.0;
        for (std::size_t t = 0; t + k < frames; ++t) cross += centered[t] * centered[t + k];
        per_channel[c].cross[k - 1] += cross;
        all.cross[k - 1] += cross;
      }
    }
  }

  auto finish = [](const Accum& acc) {
    SeriesStats s;
    s.mean = acc.sum / static_cast<double>(acc.count);
    s.variance = acc.sq / static_cast<double>(acc.count);
    for (double cross : acc.cross) s.autocorr.push_back(acc.sq > 0.0 ? cross / acc.sq : 0.0);
    return s;
  };

  StatsReport report;
  for (const auto& acc : per_channel) report.channels.push_back(finish(acc));
  report.overall = finish(all);

  std::vector<bool> is_boundary(frames, false);
  for (std::size_t b : boundaries)
    if (b > 0 && b < frames) is_boundary[b] = true;
  double boundary_sum = 0.0, interior_sum = 0.0;
  for (std::size_t t = 1; t < frames; ++t) {
    double sq = 0.0;
    for (std::size_t k = 0; k < fs; ++k) {
      const double d = static_cast<double>(stream.values[t * fs + k]) - stream.values[(t - 1) * fs + k];
      sq += d * d;
    }
    if (is_boundary[t]) {
      boundary_sum += sq;
      ++report.boundary_pairs;
    } else {
      interior_sum += sq;
      ++report.interior_pairs;
    }
  }
  if (report.boundary_pairs) report.boundary_msd = boundary_sum / (report.boundary_pairs * fs);
  if (report.interior_pairs) report.interior_msd = interior_sum / (report.interior_pairs * fs);

  double mu = 0.0;
  for (std::size_t f = 0; f < bins; ++f) mu += spec.mean_at(f);
  report.target_mean = mu / static_cast<double>(bins);
  report.target_variance = spec.variance;
  const double rho = spec.effective_rho();
  for (std::size_t k = 1; k <= K; ++k) report.target_autocorr.push_back(std::pow(rho, static_cast<double>(k)));
  report.target_interior_msd = 2.0 * spec.variance * (1.0 - rho);
  report.target_boundary_msd = 2.0 * spec.variance;
  return report;
}

/// `statistic,channel,lag,value,target` rows; channel `all` is the pooled series.
inline void write_stats_csv(std::ostream& os, const StatsReport& r) {
  char line[160];
  auto row = [&](const char* stat, const std::string& channel, std::size_t lag, double value, double target) {
    std::snprintf(line, sizeof line, "%s,%s,%zu,%.10g,%.10g\n", stat, channel.c_str(), lag, value, target);
    os << line;
  };
  auto series = [&](const SeriesStats& s, const std::string& name) {
    row("mean", name, 0, s.mean, r.target_mean);
    row("variance", name, 0, s.variance, r.target_variance);
    for (std::size_t k = 0; k < s.autocorr.size(); ++k)
      row("autocorr", name, k + 1, s.autocorr[k], r.target_autocorr[k]);
  };
  os << "statistic,channel,lag,value,target\n";
  for (std::size_t c = 0; c < r.channels.size(); ++c) series(r.channels[c], std::to_string(c));
  series(r.overall, "all");
  row("msd_interior", "all", 1, r.interior_msd, r.target_interior_msd);
  if (r.boundary_pairs) {
    row("msd_boundary", "all", 1, r.boundary_msd, r.target_boundary_msd);
    row("msd_ratio", "all", 1, r.msd_ratio(), r.target_boundary_msd / r.target_interior_msd);
  }
}

// ---------------------------------------------------------------------------
// Memory report

struct MemoryRun {
  std::string mode;  // "fifo" or "batch"
  std::size_t frames = 0;
  std::size_t peak_bytes = 0;
  std::optional<std::size_t> rss_peak_bytes;  // process-level probe, when requested
};

struct MemoryReport {
  std::vector<MemoryRun> runs;
  bool fifo_constant = true;   // every FIFO run reported the same peak
  bool batch_constant = true;  // same for batch runs; expected false

  bool constant(const std::string& mode) const { return mode == "fifo" ? fifo_constant : batch_constant; }
};

inline MemoryReport memory_report(std::vector<MemoryRun> runs) {
  MemoryReport report;
  auto all_equal = [&](const std::string& mode) {
    std::optional<std::size_t> first;
    for (const auto& r : runs) {
      if (r.mode != mode) continue;
      if (!first) first = r.peak_bytes;
      else if (*first != r.peak_bytes) return false;
    }
    return true;
  };
  report.fifo_constant = all_equal("fifo");
  report.batch_constant = all_equal("batch");
  report.runs = std::move(runs);
  return report;
}

/// `mode,frames,peak_bytes,constant[,rss_peak_bytes]`; `constant` is the
/// verdict for the row's mode.
inline void write_memory_csv(std::ostream& os, const MemoryReport& report) {
  const bool with_rss = std::any_of(report.runs.begin(), report.runs.end(),
                                    [](const MemoryRun& r) { return r.rss_peak_bytes.has_value(); });
  os << "mode,frames,peak_bytes,constant" << (with_rss ? ",rss_peak_bytes" : "") << '\n';
  for (const auto& r : report.runs) {
    os << r.mode << ',' << r.frames << ',' << r.peak_bytes << ','
       << (report.constant(r.mode) ? "true" : "false");
    if (with_rss) os << ',' << (r.rss_peak_bytes ? std::to_string(*r.rss_peak_bytes) : "");
    os << '\n';
  }
}

/// Peak resident set size of this process (VmHWM), when /proc is available.
inline std::optional<std::size_t> process_peak_rss_bytes() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::size_t kb = 0;
      if (std::sscanf(line.c_str() + 6, "%zu", &kb) == 1) return kb * 1024;
    }
  }
  return std::nullopt;
}

}  // namespace infaudio
