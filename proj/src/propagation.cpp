#include "speckle/propagation.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "speckle/error.hpp"

namespace speckle {

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Rows/columns carrying any amplitude or support; the rest contribute nothing.
void occupied_lines(const SourcePlane& plane, std::vector<std::size_t>& rows,
                    std::vector<std::size_t>& cols) {
  const auto& g = plane.grid;
  std::vector<std::uint8_t> row_hit(g.rows(), 0), col_hit(g.cols(), 0);
  const bool has_mask = plane.support_mask.same_shape(g);
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      if (g(r, c) != Complex{} || (has_mask && plane.support_mask(r, c) != 0)) {
        row_hit[r] = 1;
        col_hit[c] = 1;
      }
    }
  }
  rows.clear();
  cols.clear();
  for (std::size_t r = 0; r < g.rows(); ++r)
    if (row_hit[r]) rows.push_back(r);
  for (std::size_t c = 0; c < g.cols(); ++c)
    if (col_hit[c]) cols.push_back(c);
}

Eigen::MatrixXcd dft_kernel(int pixels, double pixel_pitch, const std::vector<std::size_t>& sites,
                            std::size_t site_count, double source_pitch, double wavelength,
                            double z) {
  Eigen::MatrixXcd kernel(pixels, static_cast<Eigen::Index>(sites.size()));
  const double k = 2.0 * std::numbers::pi / (wavelength * z);
  for (int j = 0; j < pixels; ++j) {
    const double x = static_cast<double>(j - pixels / 2) * pixel_pitch;
    for (std::size_t n = 0; n < sites.size(); ++n) {
      const double xs =
          (static_cast<double>(sites[n]) - static_cast<double>(site_count / 2)) * source_pitch;
      kernel(j, static_cast<Eigen::Index>(n)) = std::polar(1.0, -k * x * xs);
    }
  }
  return kernel;
}

}  // namespace

FarFieldPropagator::FarFieldPropagator(const SourcePlane& layout, const DetectorSpec& detector,
                                       FarFieldOptions options)
    : detector_(detector),
      wavelength_(layout.wavelength),
      source_pitch_(layout.pitch),
      source_rows_(layout.grid.rows()),
      source_cols_(layout.grid.cols()) {
  detector.validate();
  require(options.pad_factor >= 1, ErrorKind::InvalidArgument, "pad factor must be >= 1");
  require(layout.pitch > 0.0 && layout.wavelength > 0.0 && !layout.grid.empty(),
          ErrorKind::InvalidArgument, "source plane is empty or has no pitch/wavelength");

  const double z = detector.distance_z;
  const double lz = wavelength_ * z;
  scale_ = source_pitch_ * source_pitch_ / lz;

  const double a = layout.aperture_radius;
  const double fresnel_limit = 10.0 * a * a / wavelength_;
  if (z < fresnel_limit && !options.allow_fresnel) {
    throw Error(ErrorKind::FresnelRegime,
                "z = " + std::to_string(z) + " m is below 10 a^2 / lambda = " +
                    std::to_string(fresnel_limit) + " m");
  }

  const double period = lz / source_pitch_;
  const double window = std::max(detector.width_px, detector.height_px) * detector.pixel_pitch;
  if (window > period) {
    throw Error(ErrorKind::FovTooSmall,
                "detector window " + std::to_string(window) +
                    " m exceeds the alias-free field lambda z / pitch = " + std::to_string(period) +
                    " m");
  }

  fft_size_ = static_cast<std::size_t>(options.pad_factor) * std::max(source_rows_, source_cols_);
  native_pitch_ = lz / (static_cast<double>(fft_size_) * source_pitch_);
  const double ratio = detector.pixel_pitch / native_pitch_;
  const double stride = std::round(ratio);
  const bool divisible = stride >= 1.0 && std::abs(ratio - stride) <= 1e-9 * ratio &&
                         stride * detector.width_px <= static_cast<double>(fft_size_) &&
                         stride * detector.height_px <= static_cast<double>(fft_size_);

  switch (options.mode) {
    case SamplingMode::Auto:
      mode_ = divisible ? SamplingMode::FftSelect : SamplingMode::MatrixDft;
      break;
    case SamplingMode::FftSelect:
      require(divisible, ErrorKind::InvalidArgument,
              "FFT bin selection requires the pixel pitch to be a multiple of the native pitch");
      mode_ = SamplingMode::FftSelect;
      break;
    case SamplingMode::MatrixDft:
      mode_ = SamplingMode::MatrixDft;
      break;
  }
  bin_stride_ = static_cast<long>(stride);

  if (mode_ == SamplingMode::MatrixDft) {
    occupied_lines(layout, kept_rows_, kept_cols_);
    kernel_x_ = dft_kernel(detector.width_px, detector.pixel_pitch, kept_cols_, source_cols_,
                           source_pitch_, wavelength_, z);
    kernel_y_ = dft_kernel(detector.height_px, detector.pixel_pitch, kept_rows_, source_rows_,
                           source_pitch_, wavelength_, z);
  }
}

ComplexField FarFieldPropagator::propagate(const SourcePlane& source) const {
  require(source.grid.rows() == source_rows_ && source.grid.cols() == source_cols_,
          ErrorKind::ShapeMismatch, "source grid does not match the propagator layout");
  require(source.pitch == source_pitch_ && source.wavelength == wavelength_,
          ErrorKind::InvalidArgument, "source pitch/wavelength differ from the propagator layout");
  return mode_ == SamplingMode::FftSelect ? propagate_fft(source) : propagate_matrix(source);
}

ComplexField FarFieldPropagator::propagate_matrix(const SourcePlane& source) const {
  const auto nr = static_cast<Eigen::Index>(kept_rows_.size());
  const auto nc = static_cast<Eigen::Index>(kept_cols_.size());
  Eigen::MatrixXcd compact(nr, nc);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const auto row = source.grid.row(kept_rows_[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < nc; ++j) compact(i, j) = row[kept_cols_[static_cast<std::size_t>(j)]];
  }

  ComplexField out;
  out.grid = Grid<Complex>(static_cast<std::size_t>(detector_.height_px),
                           static_cast<std::size_t>(detector_.width_px));
  Eigen::Map<RowMajor> result(out.grid.data(), detector_.height_px, detector_.width_px);
  const Eigen::MatrixXcd partial = compact * kernel_x_.transpose();
  result.noalias() = kernel_y_ * partial;
  result *= scale_;

  out.pitch = detector_.pixel_pitch;
  out.plane = PlaneKind::Detector;
  out.wavelength = wavelength_;
  out.z = detector_.distance_z;
  return out;
}

ComplexField FarFieldPropagator::propagate_fft(const SourcePlane& source) const {
  const std::size_t n = fft_size_;
  auto* buffer = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * n));
  require(buffer != nullptr, ErrorKind::InvalidArgument, "FFT buffer allocation failed");
  std::fill_n(reinterpret_cast<double*>(buffer), 2 * n * n, 0.0);

  // Origin-centred source goes to index 0 so the transform phase reference is x' = 0.
  const auto wrap = [n](long i) {
    return static_cast<std::size_t>(((i % static_cast<long>(n)) + static_cast<long>(n)) %
                                    static_cast<long>(n));
  };
  for (std::size_t r = 0; r < source_rows_; ++r) {
    const std::size_t pr = wrap(static_cast<long>(r) - static_cast<long>(source_rows_ / 2));
    for (std::size_t c = 0; c < source_cols_; ++c) {
      const std::size_t pc = wrap(static_cast<long>(c) - static_cast<long>(source_cols_ / 2));
      const Complex v = source.grid(r, c);
      buffer[pr * n + pc][0] = v.real();
      buffer[pr * n + pc][1] = v.imag();
    }
  }

  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buffer, buffer,
                            FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }

  ComplexField out;
  const auto height = static_cast<std::size_t>(detector_.height_px);
  const auto width = static_cast<std::size_t>(detector_.width_px);
  out.grid = Grid<Complex>(height, width);
  for (std::size_t l = 0; l < height; ++l) {
    const std::size_t kr =
        wrap((static_cast<long>(l) - static_cast<long>(height / 2)) * bin_stride_);
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t kc =
          wrap((static_cast<long>(j) - static_cast<long>(width / 2)) * bin_stride_);
      out.grid(l, j) = scale_ * Complex{buffer[kr * n + kc][0], buffer[kr * n + kc][1]};
    }
  }
  fftw_free(buffer);

  out.pitch = detector_.pixel_pitch;
  out.plane = PlaneKind::Detector;
  out.wavelength = wavelength_;
  out.z = detector_.distance_z;
  return out;
}

ComplexField far_field(const SourcePlane& source, const DetectorSpec& detector,
                       const FarFieldOptions& options) {
  return FarFieldPropagator(source, detector, options).propagate(source);
}

ComplexField far_field(const SourcePlane& source, const DetectorSpec& detector, int pad_factor) {
  FarFieldOptions options;
  options.pad_factor = pad_factor;
  return far_field(source, detector, options);
}

Grid<double> intensity(const ComplexField& field) {
  Grid<double> out(field.grid.rows(), field.grid.cols());
  std::transform(field.grid.begin(), field.grid.end(), out.begin(),
                 [](const Complex& e) { return std::norm(e); });
  return out;
}

double expected_mean_intensity(std::size_t active_sites, double source_pitch, double wavelength,
                               double z) {
  const double s2 = source_pitch * source_pitch / (wavelength * z);
  return static_cast<double>(active_sites) * s2 * s2;
}

}  // namespace speckle
