#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "speckle/field_synth.hpp"
#include "speckle/optics.hpp"
#include "speckle/sensor.hpp"

namespace speckle {

inline constexpr std::uint16_t kStackFormatVersion = 1;

/// Acquisition metadata carried alongside the pixel data.
struct StackMeta {
  FiberSpec fiber;
  SourceGeometry geometry;
  DetectorSpec detector;
  NoiseModel noise;
  PolarizationMode polarization = PolarizationMode::SinglePol;
  std::uint64_t master_seed = 0;
  std::string created_utc = "1970-01-01T00:00:00Z";
  std::uint16_t format_version = kStackFormatVersion;
  // Recorded only; frames are independent realizations regardless.
  double frame_interval_s = 0.0;
  double exposure_time_s = 0.0;
  /// Keys this reader does not interpret, kept verbatim.
  std::map<std::string, std::string> extra;

  friend bool operator==(const StackMeta&, const StackMeta&) = default;
};

/// Ordered ensemble of frames, all with the same shape and bit depth.
struct FrameStack {
  std::vector<Frame> frames;
  StackMeta meta;

  std::size_t width() const noexcept { return frames.empty() ? 0 : frames.front().pixels.cols(); }
  std::size_t height() const noexcept { return frames.empty() ? 0 : frames.front().pixels.rows(); }

  /// Throws ShapeMismatch / InvalidArgument if frames disagree with each other
  /// or with meta.detector.
  void validate() const;

  friend bool operator==(const FrameStack&, const FrameStack&) = default;
};

/// SPKL container, little-endian:
///   "SPKL" | u16 version | u32 width | u32 height | u32 frame_count | u8 bit_depth
///   | u32 meta_length | meta (UTF-8 "key=value\n" lines, sorted by key)
///   | frames (row-major; u8 samples for bit_depth <= 8, else u16)
///   | u32 CRC-32 of every preceding byte
std::vector<std::uint8_t> encode_stack(const FrameStack& stack);

/// Throws FormatError with kind BadMagic, VersionMismatch, TruncatedFile or
/// ChecksumMismatch.
FrameStack decode_stack(const std::vector<std::uint8_t>& bytes);

void write_stack(const FrameStack& stack, const std::filesystem::path& path);
FrameStack read_stack(const std::filesystem::path& path);

/// Metadata as the sorted key/value map stored in the file.
std::map<std::string, std::string> meta_to_map(const StackMeta& meta,
                                               const std::vector<Frame>& frames);

/// Shortest round-trip decimal representation, locale independent.
std::string format_double(double value);
double parse_double(const std::string& text);

}  // namespace speckle
