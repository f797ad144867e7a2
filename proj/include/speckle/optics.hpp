#pragma once

#include <optional>

namespace speckle {

/// Core/cladding refractive indices, n1 > n2 >= 1.
struct RefractiveIndices {
  double core = 0.0;
  double cladding = 0.0;

  friend bool operator==(const RefractiveIndices&, const RefractiveIndices&) = default;
};

/// Physical parameters of a step-index multimode fiber and its illumination.
/// All lengths in meters.
struct FiberSpec {
  double core_radius = 0.0;
  double numerical_aperture = 0.0;
  double wavelength = 0.0;
  std::optional<RefractiveIndices> refractive_indices;

  /// Throws Error(InvalidArgument) if any invariant is violated, including
  /// NA disagreeing with sqrt(n1^2 - n2^2) by more than 1e-12 relative.
  void validate() const;

  /// NA derived from the indices.
  static FiberSpec from_indices(double core_radius, RefractiveIndices n, double wavelength);

  friend bool operator==(const FiberSpec&, const FiberSpec&) = default;
};

/// Camera geometry. Lengths in meters.
struct DetectorSpec {
  double distance_z = 0.0;
  double pixel_pitch = 0.0;
  int width_px = 0;
  int height_px = 0;
  int bit_depth = 8;
  double gain = 1.0;  ///< gray levels per intensity unit

  void validate() const;
  int max_gray() const noexcept { return (1 << bit_depth) - 1; }

  friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;
};

/// sqrt(n1^2 - n2^2).
double numerical_aperture(RefractiveIndices n);

/// Maximum coupling/emission half-angle in radians, arcsin(NA). Accepts NA in [0, 1].
double acceptance_angle(double numerical_aperture);
double acceptance_angle(const FiberSpec& fiber);

/// Interference fringe spacing of two rays counter-propagating at the critical
/// angle, (lambda / 2) / NA. This sets the smallest subsource size at the facet.
double fringe_spacing(double wavelength, double numerical_aperture);
double fringe_spacing(const FiberSpec& fiber);

/// Estimated number of subsources per mode at the outlet, (2 R NA / lambda)^2.
/// Returned as a real number: it is an order-of-magnitude estimate.
double subsource_count(const FiberSpec& fiber);

/// Approximate number of guided modes, 2 (pi R NA / lambda)^2.
double mode_count(const FiberSpec& fiber);

}  // namespace speckle
