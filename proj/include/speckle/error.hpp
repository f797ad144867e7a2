#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace speckle {

enum class ErrorKind {
  InvalidArgument,
  LatticeTooCoarse,
  FresnelRegime,
  FovTooSmall,
  ShapeMismatch,
  NonpositiveMean,
  EmptyStack,
  InsufficientFrames,
  ZeroMeanLane,
  InsufficientSpan,
  FitDiverged,
  DegenerateData,
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  ChecksumMismatch,
  ConfigError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-readable error class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// what() without the leading kind name.
  const char* detail() const noexcept {
    return what() + std::char_traits<char>::length(to_string(kind_)) + 2;
  }

 private:
  ErrorKind kind_;
};

/// Binary format errors also report where in the file parsing stopped.
class FormatError : public Error {
 public:
  FormatError(ErrorKind kind, const std::string& message, std::uint64_t byte_offset)
      : Error(kind, message + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::uint64_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::uint64_t byte_offset_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace speckle
