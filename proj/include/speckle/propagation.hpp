#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "speckle/field_synth.hpp"
#include "speckle/grid.hpp"
#include "speckle/optics.hpp"

namespace speckle {

enum class PlaneKind { Source, Detector };

/// Scalar complex field sampled on a square grid. For detector-plane fields,
/// pixel (r, c) sits at x = (c - cols/2) * pitch, y = (r - rows/2) * pitch.
struct ComplexField {
  Grid<Complex> grid;
  double pitch = 0.0;
  PlaneKind plane = PlaneKind::Detector;
  double wavelength = 0.0;
  double z = 0.0;
};

enum class SamplingMode {
  Auto,       ///< FftSelect when the native pitch divides the pixel pitch, else MatrixDft
  FftSelect,  ///< zero-padded FFT, nearest-bin selection
  MatrixDft,  ///< exact DTFT at the pixel coordinates (band-limited interpolation)
};

struct FarFieldOptions {
  int pad_factor = 4;
  bool allow_fresnel = false;  ///< downgrade FresnelRegime from error to accepted
  SamplingMode mode = SamplingMode::Auto;

  friend bool operator==(const FarFieldOptions&, const FarFieldOptions&) = default;
};

/// Fraunhofer propagation E(x, y) = (s^2 / (lambda z)) sum A(x', y')
/// exp(-2 pi i (x x' + y y') / (lambda z)) from a lattice of pitch s. The
/// quadratic Fresnel phase and the global e^{ikz}/i factor are dropped.
///
/// Construction precomputes the transform for one source layout and detector;
/// propagate() may then be called concurrently for any source plane with the
/// same grid shape.
class FarFieldPropagator {
 public:
  FarFieldPropagator(const SourcePlane& layout, const DetectorSpec& detector,
                     FarFieldOptions options = {});

  ComplexField propagate(const SourcePlane& source) const;

  SamplingMode mode() const noexcept { return mode_; }
  std::size_t fft_size() const noexcept { return fft_size_; }
  /// Detector-plane sample spacing of the zero-padded FFT, lambda z / (N_fft s).
  double native_pitch() const noexcept { return native_pitch_; }

 private:
  using RowMajor = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  ComplexField propagate_fft(const SourcePlane& source) const;
  ComplexField propagate_matrix(const SourcePlane& source) const;

  DetectorSpec detector_;
  double wavelength_ = 0.0;
  double source_pitch_ = 0.0;
  std::size_t source_rows_ = 0;
  std::size_t source_cols_ = 0;
  double scale_ = 0.0;
  SamplingMode mode_ = SamplingMode::MatrixDft;
  std::size_t fft_size_ = 0;
  double native_pitch_ = 0.0;
  long bin_stride_ = 1;

  std::vector<std::size_t> kept_rows_;
  std::vector<std::size_t> kept_cols_;
  Eigen::MatrixXcd kernel_x_;  ///< width x kept columns
  Eigen::MatrixXcd kernel_y_;  ///< height x kept rows
};

ComplexField far_field(const SourcePlane& source, const DetectorSpec& detector,
                       const FarFieldOptions& options);
ComplexField far_field(const SourcePlane& source, const DetectorSpec& detector,
                       int pad_factor = 4);

/// Elementwise |E|^2.
Grid<double> intensity(const ComplexField& field);

/// Ensemble mean of |E|^2 at any detector pixel for unit-modulus random-phase
/// subsources: N s^4 / (lambda z)^2.
double expected_mean_intensity(std::size_t active_sites, double source_pitch, double wavelength,
                               double z);

}  // namespace speckle
