#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "speckle/grid.hpp"
#include "speckle/optics.hpp"
#include "speckle/rng.hpp"

namespace speckle {

using Complex = std::complex<double>;

enum class SourceKind { OneSource, TwoSources };

/// Facet layout: one disk of radius a, or two disks centered at x' = +-d/2.
struct SourceGeometry {
  SourceKind kind = SourceKind::OneSource;
  double aperture_radius = 0.0;
  double separation = 0.0;                ///< TwoSources only
  std::optional<double> lattice_pitch;    ///< defaults to fringe_spacing(fiber)

  void validate() const;

  friend bool operator==(const SourceGeometry&, const SourceGeometry&) = default;
};

/// Minimum number of lattice sites across an aperture diameter.
inline constexpr double kMinSitesPerDiameter = 10.0;

/// Discretized source plane. Site (r, c) sits at
///   x' = (c - cols/2) * pitch,  y' = (r - rows/2) * pitch   (integer division).
struct SourcePlane {
  Grid<Complex> grid;
  double pitch = 0.0;
  double wavelength = 0.0;
  Grid<std::uint8_t> support_mask;    ///< 1 inside the aperture(s)
  Grid<std::uint8_t> aperture_label;  ///< 0 outside, k + 1 inside aperture k
  std::size_t subsource_count_active = 0;

  /// Geometry actually realized on the lattice. For two sources the center
  /// separation is snapped to a whole number of lattice pitches so that each
  /// disk is point-symmetric about its center.
  double aperture_radius = 0.0;
  double effective_separation = 0.0;
  std::vector<double> aperture_centers_x;

  /// Flat indices of the active sites of each aperture, in raster order.
  std::vector<std::vector<std::size_t>> aperture_sites;

  double site_x(std::size_t c) const noexcept {
    return (static_cast<double>(c) - static_cast<double>(grid.cols() / 2)) * pitch;
  }
  double site_y(std::size_t r) const noexcept {
    return (static_cast<double>(r) - static_cast<double>(grid.rows() / 2)) * pitch;
  }

  /// Wraps an arbitrary amplitude grid (used for point sources and test
  /// patterns). Support is the set of nonzero sites; the effective aperture
  /// radius is the largest distance of a support site from the origin.
  static SourcePlane from_amplitudes(Grid<Complex> amplitudes, double pitch, double wavelength);
};

/// Rasterizes circ(|r' - center| / a) onto the lattice. Inclusive at |r'| = a.
/// Returns the unit-amplitude support; phases are left at zero.
/// Throws LatticeTooCoarse below kMinSitesPerDiameter sites per diameter.
SourcePlane build_support(const SourceGeometry& geometry, const FiberSpec& fiber);

/// Rasterization behind build_support, without the coarseness check.
SourcePlane rasterize_support(const SourceGeometry& geometry, double pitch, double wavelength);

/// Assigns i.i.d. Uniform[0, 2pi) phases to every active site. Each aperture
/// draws from its own stream so two-source frames model independent sources.
/// `orthogonal` selects the streams of the second polarization component.
SourcePlane randomize_phases(const SourcePlane& plane, SeedSpec seed, bool orthogonal = false);

/// In-place variant used by the simulator hot loop.
void randomize_phases_inplace(SourcePlane& plane, SeedSpec seed, bool orthogonal = false);

}  // namespace speckle
