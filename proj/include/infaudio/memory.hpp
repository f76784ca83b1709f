// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace infaudio {

/// Explicit accounting of sampler-owned buffers. Peak is the high-water mark
/// of the bytes held live at once; allocator overhead is deliberately
/// invisible so the number depends only on the algorithm's buffer sizes.
class AllocationMeter {
 public:
  void acquire(std::size_t bytes) noexcept {
    live_ += bytes;
    peak_ = std::max(peak_, live_);
  }
  void release(std::size_t bytes) noexcept { live_ -= std::min(bytes, live_); }

  std::size_t live_bytes() const noexcept { return live_; }
  std::size_t peak_bytes() const noexcept { return peak_; }

 private:
  std::size_t live_ = 0;
  std::size_t peak_ = 0;
};

/// Fixed-size buffer whose lifetime is reported to an optional meter.
template <typename T>
class TrackedBuffer {
 public:
  TrackedBuffer() = default;
  TrackedBuffer(std::size_t count, AllocationMeter* meter, T fill = T{})
      : data_(count, fill), meter_(meter) {
    if (meter_) meter_->acquire(bytes());
  }
  TrackedBuffer(std::vector<T> data, AllocationMeter* meter) : data_(std::move(data)), meter_(meter) {
    if (meter_) meter_->acquire(bytes());
  }

  TrackedBuffer(const TrackedBuffer&) = delete;
  TrackedBuffer& operator=(const TrackedBuffer&) = delete;
  TrackedBuffer(TrackedBuffer&& other) noexcept
      : data_(std::move(other.data_)), meter_(std::exchange(other.meter_, nullptr)) {}
  TrackedBuffer& operator=(TrackedBuffer&& other) noexcept {
    if (this != &other) {
      reset();
      data_ = std::move(other.data_);
      meter_ = std::exchange(other.meter_, nullptr);
    }
    return *this;
  }
  ~TrackedBuffer() { reset(); }

  std::size_t size() const noexcept { return data_.size(); }
  std::size_t bytes() const noexcept { return data_.size() * sizeof(T); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }

  /// Hands the storage to the caller; the meter stops counting it.
  std::vector<T> release() && {
    reset_meter();
    return std::move(data_);
  }

 private:
  void reset_meter() noexcept {
    if (meter_) meter_->release(bytes());
    meter_ = nullptr;
  }
  void reset() noexcept {
    reset_meter();
    data_.clear();
  }

  std::vector<T> data_;
  AllocationMeter* meter_ = nullptr;
};

}  // namespace infaudio
