#include "speckle/sensor.hpp"

#include <algorithm>
#include <cmath>

#include "speckle/error.hpp"

namespace speckle {

void NoiseModel::validate(int bit_depth) const {
  require(std::isfinite(read_noise_sigma) && read_noise_sigma >= 0.0, ErrorKind::InvalidArgument,
          "read noise sigma must be finite and >= 0");
  require(std::isfinite(offset) && offset >= 0.0 && offset < static_cast<double>(1 << bit_depth),
          ErrorKind::InvalidArgument, "offset must lie in [0, 2^bit_depth)");
}

Grid<double> polarized_intensity(const ComplexField& first, const ComplexField* second,
                                 PolarizationMode mode) {
  Grid<double> out = intensity(first);
  if (mode == PolarizationMode::SinglePol) return out;
  require(second != nullptr, ErrorKind::InvalidArgument,
          "UnpolarizedSum needs the orthogonal field component");
  require(second->grid.same_shape(first.grid), ErrorKind::ShapeMismatch,
          "polarization components differ in shape");
  auto it = second->grid.begin();
  for (double& v : out) v += std::norm(*it++);
  return out;
}

Capture capture(const Grid<double>& intensity, const DetectorSpec& detector,
                const NoiseModel& noise, SeedSpec seed) {
  detector.validate();
  noise.validate(detector.bit_depth);
  require(intensity.rows() == static_cast<std::size_t>(detector.height_px) &&
              intensity.cols() == static_cast<std::size_t>(detector.width_px),
          ErrorKind::ShapeMismatch, "intensity grid does not match the detector size");

  Capture result;
  result.frame.pixels = Grid<std::uint16_t>(intensity.rows(), intensity.cols());
  result.frame.bit_depth = detector.bit_depth;
  result.frame.exposure_index = seed.frame_index;

  const double top = static_cast<double>(detector.max_gray());
  Rng rng(seed, Stream::CameraNoise);
  auto out = result.frame.pixels.begin();
  for (double value : intensity) {
    double gray = detector.gain * value + noise.offset;
    if (noise.read_noise_sigma > 0.0) gray += noise.read_noise_sigma * rng.normal();
    gray = std::floor(gray + 0.5);
    if (gray < 0.0 || gray > top) {
      ++result.clipped_pixels;
      gray = std::clamp(gray, 0.0, top);
    }
    *out++ = static_cast<std::uint16_t>(gray);
  }
  result.frame.saturation_flag = result.clipped_pixels > 0;
  return result;
}

double auto_gain(double target_gray, double mean_intensity) {
  require(target_gray > 0.0, ErrorKind::InvalidArgument, "target gray level must be positive");
  require(mean_intensity > 0.0, ErrorKind::NonpositiveMean, "mean intensity must be positive");
  return target_gray / mean_intensity;
}

}  // namespace speckle
