#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "speckle/frame_stack.hpp"
#include "speckle/sensor.hpp"

namespace speckle {

/// Normalized intensity histogram. For camera data there is one bin per gray
/// level and the first/last bins collect clipped pixels.
struct IntensityHistogram {
  std::vector<double> bin_edges;  ///< bin_count() + 1 ascending edges
  std::vector<std::uint64_t> counts;
  std::uint64_t total_samples = 0;
  std::vector<double> density;    ///< counts / (total * width); integrates to 1
  bool polarizer = true;          ///< reference law: exponential (true) or 2-dof gamma
  double gain = 1.0;              ///< gray levels per intensity unit
  bool quantized = false;         ///< camera gray levels with clip bins at both ends

  std::size_t bin_count() const noexcept { return counts.size(); }
  double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
  double width(std::size_t i) const { return bin_edges[i + 1] - bin_edges[i]; }
  std::uint64_t clipped_low() const { return quantized ? counts.front() : 0; }
  std::uint64_t clipped_high() const { return quantized ? counts.back() : 0; }
  /// Bins that take part in fitting (clip bins excluded).
  bool fit_bin(std::size_t i) const noexcept {
    return !quantized || (i != 0 && i + 1 != counts.size());
  }
};

/// Boltzmann law p(I) = exp(-I / mean) / mean. Throws NonpositiveMean.
double boltzmann_density(double intensity, double mean);

/// Single-polarization thermal law (polarizer) or the sum of two independent
/// exponential components, 4 I / mean^2 exp(-2 I / mean) (no polarizer).
double thermal_density(double intensity, double mean, bool polarizer);
double thermal_cdf(double intensity, double mean, bool polarizer);

/// One bin per gray level over every pixel of every frame. Throws EmptyStack.
IntensityHistogram histogram(const FrameStack& stack, bool polarizer);

/// Continuous samples binned by the Freedman-Diaconis rule from 0 to max.
IntensityHistogram histogram(std::span<const double> samples, bool polarizer);

/// Index of the most populated bin, ignoring clip bins.
std::size_t histogram_mode(const IntensityHistogram& h);

/// Kolmogorov-Smirnov distance sup |F_n - F|.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);
double ks_distance_exponential(std::span<const double> samples, double mean);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance_two_sample(std::span<const double> a, std::span<const double> b);

/// <dI^2> / <I>^2: 1 for polarized thermal light, 1/2 for unpolarized.
double normalized_variance(std::span<const double> samples);

/// CDF of X = E + N(offset, sigma^2), E ~ Exp(mean): the exponentially modified
/// Gaussian. sigma = 0 reduces to the shifted exponential.
double noisy_exponential_cdf(double x, double mean, double sigma, double offset);

struct StatsFitResult {
  double mean_intensity = 0.0;  ///< fitted mean in intensity units (mean_gray / gain)
  double mean_gray = 0.0;       ///< fitted mean above offset, in histogram units
  double noise_sigma = 0.0;
  double noise_offset = 0.0;
  double chi2_per_dof = 0.0;
  double ks_distance = 0.0;
  std::vector<double> model_density;        ///< bin-averaged noisy model per bin
  std::vector<double> deconvolved_density;  ///< noise-free exponential at bin centers
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  ///< (mean, sigma, offset)
  int iterations = 0;
};

/// Forward-model "deconvolution": least squares fit of the binned
/// exponential (x) Gaussian model to the histogram, then report the underlying
/// noise-free exponential. `noise_prior` seeds sigma and offset.
StatsFitResult fit_noisy_exponential(const IntensityHistogram& h,
                                     std::optional<NoiseModel> noise_prior = std::nullopt);

}  // namespace speckle
