#include "speckle/field_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "speckle/error.hpp"

namespace speckle {

void SourceGeometry::validate() const {
  require(std::isfinite(aperture_radius) && aperture_radius > 0.0, ErrorKind::InvalidArgument,
          "aperture radius must be positive");
  if (lattice_pitch) {
    require(std::isfinite(*lattice_pitch) && *lattice_pitch > 0.0, ErrorKind::InvalidArgument,
            "lattice pitch must be positive");
  }
  if (kind == SourceKind::TwoSources) {
    require(separation > 2.0 * aperture_radius, ErrorKind::InvalidArgument,
            "two-source separation must exceed 2a (apertures must be disjoint)");
  }
}

SourcePlane SourcePlane::from_amplitudes(Grid<Complex> amplitudes, double pitch,
                                         double wavelength) {
  require(pitch > 0.0 && wavelength > 0.0, ErrorKind::InvalidArgument,
          "pitch and wavelength must be positive");
  SourcePlane plane;
  plane.pitch = pitch;
  plane.wavelength = wavelength;
  plane.support_mask = Grid<std::uint8_t>(amplitudes.rows(), amplitudes.cols(), 0);
  plane.aperture_label = Grid<std::uint8_t>(amplitudes.rows(), amplitudes.cols(), 0);
  plane.grid = std::move(amplitudes);
  plane.aperture_sites.resize(1);
  plane.aperture_centers_x = {0.0};
  double max_radius = 0.0;
  for (std::size_t r = 0; r < plane.grid.rows(); ++r) {
    for (std::size_t c = 0; c < plane.grid.cols(); ++c) {
      if (plane.grid(r, c) == Complex{}) continue;
      plane.support_mask(r, c) = 1;
      plane.aperture_label(r, c) = 1;
      plane.aperture_sites[0].push_back(r * plane.grid.cols() + c);
      max_radius = std::max(max_radius, std::hypot(plane.site_x(c), plane.site_y(r)));
    }
  }
  plane.subsource_count_active = plane.aperture_sites[0].size();
  plane.aperture_radius = std::max(max_radius, 0.5 * pitch);
  return plane;
}

SourcePlane build_support(const SourceGeometry& geometry, const FiberSpec& fiber) {
  geometry.validate();
  fiber.validate();
  const double pitch = geometry.lattice_pitch.value_or(fringe_spacing(fiber));
  const double sites_per_diameter = 2.0 * geometry.aperture_radius / pitch;
  if (sites_per_diameter < kMinSitesPerDiameter) {
    throw Error(ErrorKind::LatticeTooCoarse,
                "only " + std::to_string(sites_per_diameter) +
                    " lattice sites across the aperture diameter (need >= 10)");
  }
  return rasterize_support(geometry, pitch, fiber.wavelength);
}

SourcePlane rasterize_support(const SourceGeometry& geometry, double pitch, double wavelength) {
  geometry.validate();
  require(pitch > 0.0 && wavelength > 0.0, ErrorKind::InvalidArgument,
          "pitch and wavelength must be positive");
  const double radius_sites = geometry.aperture_radius / pitch;

  // Centers in units of half a pitch so that odd separations land on half-sites.
  std::vector<long> centers_half;
  if (geometry.kind == SourceKind::OneSource) {
    centers_half = {0};
  } else {
    const long separation_sites = std::lround(geometry.separation / pitch);
    centers_half = {-separation_sites, separation_sites};
  }

  const long half_rows = static_cast<long>(std::ceil(radius_sites)) + 1;
  const long max_center = *std::max_element(centers_half.begin(), centers_half.end());
  const long half_cols = static_cast<long>(std::ceil(0.5 * max_center + radius_sites)) + 1;
  const auto rows = static_cast<std::size_t>(2 * half_rows + 1);
  const auto cols = static_cast<std::size_t>(2 * half_cols + 1);

  SourcePlane plane;
  plane.pitch = pitch;
  plane.wavelength = wavelength;
  plane.grid = Grid<Complex>(rows, cols);
  plane.support_mask = Grid<std::uint8_t>(rows, cols, 0);
  plane.aperture_label = Grid<std::uint8_t>(rows, cols, 0);
  plane.aperture_sites.resize(centers_half.size());
  plane.aperture_radius = geometry.aperture_radius;
  for (long ch : centers_half) plane.aperture_centers_x.push_back(0.5 * ch * pitch);
  if (centers_half.size() == 2) {
    plane.effective_separation = plane.aperture_centers_x[1] - plane.aperture_centers_x[0];
  }

  const double r2 = radius_sites * radius_sites;
  for (std::size_t r = 0; r < rows; ++r) {
    const double dy = static_cast<double>(static_cast<long>(r) - half_rows);
    for (std::size_t c = 0; c < cols; ++c) {
      // Twice the site coordinate, in pitches: exact integer arithmetic.
      const long x2 = 2 * (static_cast<long>(c) - half_cols);
      for (std::size_t k = 0; k < centers_half.size(); ++k) {
        const double dx = 0.5 * static_cast<double>(x2 - centers_half[k]);
        if (dx * dx + dy * dy <= r2) {
          plane.grid(r, c) = Complex{1.0, 0.0};
          plane.support_mask(r, c) = 1;
          plane.aperture_label(r, c) = static_cast<std::uint8_t>(k + 1);
          plane.aperture_sites[k].push_back(r * cols + c);
          break;
        }
      }
    }
  }
  for (const auto& sites : plane.aperture_sites) plane.subsource_count_active += sites.size();
  return plane;
}

void randomize_phases_inplace(SourcePlane& plane, SeedSpec seed, bool orthogonal) {
  const std::uint64_t base = orthogonal ? static_cast<std::uint64_t>(Stream::OrthogonalAperture0)
                                        : static_cast<std::uint64_t>(Stream::Aperture0);
  Complex* data = plane.grid.data();
  for (std::size_t k = 0; k < plane.aperture_sites.size(); ++k) {
    Rng rng(seed, static_cast<Stream>(base + k));
    for (std::size_t index : plane.aperture_sites[k]) {
      const double phase = 2.0 * std::numbers::pi * rng.uniform();
      data[index] = std::polar(std::abs(data[index]), phase);
    }
  }
}

SourcePlane randomize_phases(const SourcePlane& plane, SeedSpec seed, bool orthogonal) {
  SourcePlane out = plane;
  randomize_phases_inplace(out, seed, orthogonal);
  return out;
}

}  // namespace speckle
