// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "infaudio/denoiser.hpp"
#include "infaudio/error.hpp"
#include "infaudio/fifo_engine.hpp"

namespace infaudio {

// IAFS layout (all little-endian):
//   offset 0   char[4]  "IAFS"
//   offset 4   u32      version (1)
//   offset 8   u32      channels C
//   offset 12  u32      frequency bins Fr
//   offset 16  u64      frame count (0 while streaming)
//   offset 24  f32[]    frames, frame-major, then channel, then frequency

namespace le {

inline void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
inline void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline void put_f32s(std::span<const float> in, std::uint8_t* out) {
  for (std::size_t i = 0; i < in.size(); ++i) put_u32(out + 4 * i, std::bit_cast<std::uint32_t>(in[i]));
}
inline void get_f32s(const std::uint8_t* in, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<float>(get_u32(in + 4 * i));
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace le

inline constexpr std::array<char, 4> kStreamMagic{'I', 'A', 'F', 'S'};
inline constexpr std::uint32_t kStreamVersion = 1;
inline constexpr std::size_t kStreamHeaderBytes = 24;

/// A whole frame stream held in memory.
struct FrameStream {
  FrameShape shape;
  std::vector<float> values;

  std::size_t frame_count() const noexcept {
    return shape.frame_size() == 0 ? 0 : values.size() / shape.frame_size();
  }
  std::span<const float> frame(std::size_t i) const {
    return std::span<const float>(values).subspan(i * shape.frame_size(), shape.frame_size());
  }
  float at(std::size_t frame, std::size_t channel, std::size_t bin) const {
    return values[frame * shape.frame_size() + channel * shape.freq_bins + bin];
  }
};

/// Streaming IAFS writer. The frame count stays 0 until finalize(), which
/// the destructor calls if the caller did not.
class FrameStreamWriter final : public FrameSink {
 public:
  FrameStreamWriter(const std::filesystem::path& path, FrameShape shape)
      : shape_(shape), out_(path, std::ios::binary | std::ios::trunc), scratch_(shape.frame_size() * 4) {
    if (!out_) throw Error(Errc::IoError, "cannot create " + path.string());
    std::array<std::uint8_t, kStreamHeaderBytes> header{};
    std::memcpy(header.data(), kStreamMagic.data(), 4);
    le::put_u32(header.data() + 4, kStreamVersion);
    le::put_u32(header.data() + 8, static_cast<std::uint32_t>(shape.channels));
    le::put_u32(header.data() + 12, static_cast<std::uint32_t>(shape.freq_bins));
    le::put_u64(header.data() + 16, 0);
    out_.write(reinterpret_cast<const char*>(header.data()), header.size());
    if (!out_) throw Error(Errc::IoError, "cannot write header to " + path.string());
  }

  FrameStreamWriter(const FrameStreamWriter&) = delete;
  FrameStreamWriter& operator=(const FrameStreamWriter&) = delete;

  ~FrameStreamWriter() override {
    try {
      finalize();
    } catch (...) {
    }
  }

  bool write_frame(std::span<const float> frame) override {
    if (finalized_ || frame.size() != shape_.frame_size()) return false;
    le::put_f32s(frame, scratch_.data());
    out_.write(reinterpret_cast<const char*>(scratch_.data()), static_cast<std::streamsize>(scratch_.size()));
    if (!out_) return false;
    ++frames_;
    return true;
  }

  /// Patches the frame count into the header and closes the file.
  void finalize() {
    if (finalized_) return;
    finalized_ = true;
    std::array<std::uint8_t, 8> count{};
    le::put_u64(count.data(), frames_);
    out_.seekp(16);
    out_.write(reinterpret_cast<const char*>(count.data()), count.size());
    out_.close();
    if (out_.fail()) throw Error(Errc::IoError, "failed to finalize frame stream");
  }

  std::uint64_t frames_written() const noexcept { return frames_; }

 private:
  FrameShape shape_;
  std::ofstream out_;
  std::vector<std::uint8_t> scratch_;
  std::uint64_t frames_ = 0;
  bool finalized_ = false;
};

inline FrameStream parse_stream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kStreamMagic.data(), 4) != 0)
    throw Error(Errc::BadMagic, "not an IAFS stream");
  if (bytes.size() < kStreamHeaderBytes) throw Error(Errc::TruncatedFile, "IAFS header is incomplete");
  if (le::get_u32(bytes.data() + 4) != kStreamVersion)
    throw Error(Errc::BadMagic, "unsupported IAFS version");

  FrameStream s;
  s.shape = {le::get_u32(bytes.data() + 8), le::get_u32(bytes.data() + 12)};
  const std::uint64_t declared = le::get_u64(bytes.data() + 16);
  const std::size_t frame_bytes = s.shape.frame_size() * 4;
  if (frame_bytes == 0) throw Error(Errc::BadShape, "IAFS frame shape is empty");

  const std::size_t payload = bytes.size() - kStreamHeaderBytes;
  if (payload % frame_bytes != 0)
    throw Error(Errc::TruncatedFile, "payload is not a whole number of frames");
  const std::uint64_t present = payload / frame_bytes;
  if (declared != 0 && declared != present)
    throw Error(Errc::CountMismatch, "header declares " + std::to_string(declared) + " frames, payload has " +
                                         std::to_string(present));
  s.values.resize(payload / 4);
  le::get_f32s(bytes.data() + kStreamHeaderBytes, s.values);
  return s;
}

inline FrameStream read_stream(const std::filesystem::path& path) {
  const auto bytes = le::read_file(path);
  return parse_stream(bytes);
}

inline void write_stream(const std::filesystem::path& path, const FrameStream& stream) {
  FrameStreamWriter writer(path, stream.shape);
  for (std::size_t i = 0; i < stream.frame_count(); ++i)
    if (!writer.write_frame(stream.frame(i))) throw Error(Errc::IoError, "failed writing " + path.string());
  writer.finalize();
}

}  // namespace infaudio
