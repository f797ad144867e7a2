#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "speckle/correlation.hpp"
#include "speckle/field_synth.hpp"
#include "speckle/optics.hpp"
#include "speckle/propagation.hpp"
#include "speckle/sensor.hpp"

namespace speckle {

/// Every simulation and analysis parameter of a run.
///
/// Text form is one `key = value` per line, `#` starts a comment. Lengths need
/// a unit suffix (m, cm, mm, um, nm); times need s, ms or us. Unknown keys and
/// duplicate keys are errors. Missing keys keep the defaults below, which
/// describe the 200 um core, NA 0.39 fiber at 633 nm imaged at 20 cm.
struct RunConfig {
  FiberSpec fiber{100e-6, 0.39, 633e-9, std::nullopt};
  SourceGeometry geometry{SourceKind::OneSource, 100e-6, 0.0, std::nullopt};
  DetectorSpec detector{0.2, 25e-6, 256, 256, 8, 1.0};
  /// Unset means choose the gain so the mean gray level is target_mean_gray.
  std::optional<double> gain;
  double target_mean_gray = 25.0;
  NoiseModel noise{};
  PolarizationMode polarization = PolarizationMode::SinglePol;

  std::size_t frames = 200;
  std::uint64_t master_seed = 1;
  FarFieldOptions far_field{};
  /// 0 = hardware concurrency.
  std::size_t threads = 0;
  double frame_interval_s = 0.0;
  double exposure_time_s = 0.0;
  std::string created_utc = "1970-01-01T00:00:00Z";

  /// g2 reference column; unset = width / 4.
  std::optional<std::size_t> g2_x0;
  /// Unset = as far as the row allows.
  std::optional<std::size_t> g2_max_offset;
  bool g2_stationary = false;
  /// Unset = follow geometry.kind.
  std::optional<G2Model> fit_model;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses the text form. Errors are ConfigError with "<origin>:<line>: <key>:" prefixes.
RunConfig parse_run_config(std::string_view text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical text form; parse_run_config(format_run_config(c)) == c.
std::string format_run_config(const RunConfig& config);

/// "12.5 um" -> 1.25e-5. Throws ConfigError when the unit is missing or unknown.
double parse_length(std::string_view text);
/// "10 ms" -> 0.01.
double parse_time(std::string_view text);

/// Checks the cross-field constraints (fiber, geometry, detector, noise).
void validate(const RunConfig& config);

}  // namespace speckle
