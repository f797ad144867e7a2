#include "speckle/optics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "speckle/error.hpp"

namespace speckle {

void FiberSpec::validate() const {
  require(std::isfinite(core_radius) && core_radius > 0.0, ErrorKind::InvalidArgument,
          "fiber core radius must be positive");
  require(std::isfinite(wavelength) && wavelength > 0.0, ErrorKind::InvalidArgument,
          "wavelength must be positive");
  require(numerical_aperture > 0.0 && numerical_aperture < 1.0, ErrorKind::InvalidArgument,
          "numerical aperture must lie in (0, 1)");
  if (refractive_indices) {
    const double derived = speckle::numerical_aperture(*refractive_indices);
    require(std::abs(derived - numerical_aperture) <= 1e-12 * numerical_aperture,
            ErrorKind::InvalidArgument,
            "NA " + std::to_string(numerical_aperture) +
                " inconsistent with sqrt(n1^2 - n2^2) = " + std::to_string(derived));
  }
}

FiberSpec FiberSpec::from_indices(double core_radius, RefractiveIndices n, double wavelength) {
  FiberSpec spec{core_radius, speckle::numerical_aperture(n), wavelength, n};
  spec.validate();
  return spec;
}

void DetectorSpec::validate() const {
  require(std::isfinite(distance_z) && distance_z > 0.0, ErrorKind::InvalidArgument,
          "detector distance must be positive");
  require(std::isfinite(pixel_pitch) && pixel_pitch > 0.0, ErrorKind::InvalidArgument,
          "pixel pitch must be positive");
  require(width_px >= 2 && height_px >= 2, ErrorKind::InvalidArgument,
          "detector must be at least 2x2 pixels");
  require(bit_depth >= 1 && bit_depth <= 16, ErrorKind::InvalidArgument,
          "bit depth must be in [1, 16]");
  require(std::isfinite(gain) && gain > 0.0, ErrorKind::InvalidArgument, "gain must be positive");
}

double numerical_aperture(RefractiveIndices n) {
  require(n.cladding >= 1.0 && n.core > n.cladding, ErrorKind::InvalidArgument,
          "refractive indices must satisfy n1 > n2 >= 1");
  return std::sqrt(n.core * n.core - n.cladding * n.cladding);
}

double acceptance_angle(double numerical_aperture) {
  require(numerical_aperture >= 0.0 && numerical_aperture <= 1.0, ErrorKind::InvalidArgument,
          "numerical aperture must lie in [0, 1]");
  return std::asin(numerical_aperture);
}

double acceptance_angle(const FiberSpec& fiber) {
  fiber.validate();
  return acceptance_angle(fiber.numerical_aperture);
}

double fringe_spacing(double wavelength, double numerical_aperture) {
  require(wavelength > 0.0, ErrorKind::InvalidArgument, "wavelength must be positive");
  require(numerical_aperture > 0.0 && numerical_aperture <= 1.0, ErrorKind::InvalidArgument,
          "numerical aperture must lie in (0, 1]");
  return 0.5 * wavelength / numerical_aperture;
}

double fringe_spacing(const FiberSpec& fiber) {
  fiber.validate();
  return fringe_spacing(fiber.wavelength, fiber.numerical_aperture);
}

double subsource_count(const FiberSpec& fiber) {
  fiber.validate();
  const double ratio = 2.0 * fiber.core_radius * fiber.numerical_aperture / fiber.wavelength;
  return ratio * ratio;
}

double mode_count(const FiberSpec& fiber) {
  fiber.validate();
  const double ratio =
      std::numbers::pi * fiber.core_radius * fiber.numerical_aperture / fiber.wavelength;
  return 2.0 * ratio * ratio;
}

}  // namespace speckle
