#pragma once

#include <cstddef>
#include <cstdint>

#include "speckle/grid.hpp"
#include "speckle/optics.hpp"
#include "speckle/propagation.hpp"
#include "speckle/rng.hpp"

namespace speckle {

/// One quantized camera image.
struct Frame {
  Grid<std::uint16_t> pixels;
  int bit_depth = 8;
  std::uint64_t exposure_index = 0;
  bool saturation_flag = false;  ///< some pixel was clipped at 0 or at the top gray level

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Additive Gaussian read noise plus a constant dark offset, in gray levels.
struct NoiseModel {
  double read_noise_sigma = 0.0;
  double offset = 0.0;

  void validate(int bit_depth) const;

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

enum class PolarizationMode {
  SinglePol,       ///< linear polarizer in front of the camera: |A|^2
  UnpolarizedSum,  ///< no polarizer: |A|^2 + |B|^2 for independent components
};

/// SinglePol ignores `second`. UnpolarizedSum requires it (same shape).
Grid<double> polarized_intensity(const ComplexField& first, const ComplexField* second,
                                 PolarizationMode mode);

/// Fraction of clipped pixels above which a capture is flagged as saturated.
inline constexpr double kSaturationWarningFraction = 1e-3;

struct Capture {
  Frame frame;
  std::size_t clipped_pixels = 0;

  /// True when more than 0.1% of the pixels were clipped.
  bool saturation_warning() const noexcept {
    return static_cast<double>(clipped_pixels) >
           kSaturationWarningFraction * static_cast<double>(frame.pixels.size());
  }
};

/// pixels = clip(floor(gain * I + offset + eta + 1/2), 0, 2^bits - 1),
/// eta ~ Normal(0, sigma^2) i.i.d. from the CameraNoise stream of `seed`.
Capture capture(const Grid<double>& intensity, const DetectorSpec& detector,
                const NoiseModel& noise, SeedSpec seed);

/// Gain that puts the ensemble mean gray level (before offset) at `target_gray`.
double auto_gain(double target_gray, double mean_intensity);

}  // namespace speckle
