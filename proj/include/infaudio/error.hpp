// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace infaudio {

enum class Errc {
  InvalidRange,
  ShapeMismatch,
  TimestepOutOfRange,
  InvalidCount,
  InvalidFractions,
  InvalidSkip,
  NonDecreasingStep,
  SingularSystem,
  SinkFailure,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  NonFiniteValue,
  BadShape,
  EmptyRegion,
  EmptyStream,
  InvalidArgument,
  IoError,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidRange: return "InvalidRange";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::TimestepOutOfRange: return "TimestepOutOfRange";
    case Errc::InvalidCount: return "InvalidCount";
    case Errc::InvalidFractions: return "InvalidFractions";
    case Errc::InvalidSkip: return "InvalidSkip";
    case Errc::NonDecreasingStep: return "NonDecreasingStep";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::SinkFailure: return "SinkFailure";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::BadShape: return "BadShape";
    case Errc::EmptyRegion: return "EmptyRegion";
    case Errc::EmptyStream: return "EmptyStream";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace infaudio
