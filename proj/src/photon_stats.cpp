#include "speckle/photon_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "speckle/error.hpp"
#include "speckle/least_squares.hpp"

namespace speckle {

namespace {

// log of the standard normal CDF, accurate far into the lower tail.
double log_normal_cdf(double w) {
  if (w > -30.0) return std::log(0.5 * std::erfc(-w / std::numbers::sqrt2));
  const double w2 = w * w;
  return -0.5 * w2 - std::log(-w) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / w2 + 3.0 / (w2 * w2));
}

double normal_cdf(double w) { return 0.5 * std::erfc(-w / std::numbers::sqrt2); }

IntensityHistogram finish(IntensityHistogram h) {
  h.total_samples = std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0});
  h.density.resize(h.counts.size());
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    h.density[i] = static_cast<double>(h.counts[i]) /
                   (static_cast<double>(h.total_samples) * h.width(i));
  }
  return h;
}

}  // namespace

double boltzmann_density(double intensity, double mean) {
  require(mean > 0.0, ErrorKind::NonpositiveMean, "mean intensity must be positive");
  require(intensity >= 0.0, ErrorKind::InvalidArgument, "intensity must be >= 0");
  return std::exp(-intensity / mean) / mean;
}

double thermal_density(double intensity, double mean, bool polarizer) {
  if (polarizer) return boltzmann_density(intensity, mean);
  require(mean > 0.0, ErrorKind::NonpositiveMean, "mean intensity must be positive");
  require(intensity >= 0.0, ErrorKind::InvalidArgument, "intensity must be >= 0");
  return 4.0 * intensity / (mean * mean) * std::exp(-2.0 * intensity / mean);
}

double thermal_cdf(double intensity, double mean, bool polarizer) {
  require(mean > 0.0, ErrorKind::NonpositiveMean, "mean intensity must be positive");
  if (intensity <= 0.0) return 0.0;
  if (polarizer) return -std::expm1(-intensity / mean);
  const double t = 2.0 * intensity / mean;
  return 1.0 - (1.0 + t) * std::exp(-t);
}

IntensityHistogram histogram(const FrameStack& stack, bool polarizer) {
  if (stack.frames.empty()) throw Error(ErrorKind::EmptyStack, "frame stack has no frames");
  stack.validate();
  const int levels = 1 << stack.frames.front().bit_depth;

  IntensityHistogram h;
  h.polarizer = polarizer;
  h.gain = stack.meta.detector.gain;
  h.quantized = true;
  h.counts.assign(static_cast<std::size_t>(levels), 0);
  h.bin_edges.resize(static_cast<std::size_t>(levels) + 1);
  for (int g = 0; g <= levels; ++g) h.bin_edges[static_cast<std::size_t>(g)] = g - 0.5;
  for (const Frame& f : stack.frames) {
    for (std::uint16_t v : f.pixels) ++h.counts[v];
  }
  return finish(std::move(h));
}

IntensityHistogram histogram(std::span<const double> samples, bool polarizer) {
  if (samples.empty()) throw Error(ErrorKind::EmptyStack, "no intensity samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  const std::size_t n = sorted.size();
  const auto q1 = sorted.begin() + static_cast<std::ptrdiff_t>(n / 4);
  const auto q3 = sorted.begin() + static_cast<std::ptrdiff_t>((3 * n) / 4);
  std::nth_element(sorted.begin(), q1, sorted.end());
  const double v1 = *q1;
  std::nth_element(sorted.begin(), q3, sorted.end());
  const double v3 = *q3;
  const double top = *std::max_element(sorted.begin(), sorted.end());
  require(*std::min_element(sorted.begin(), sorted.end()) >= 0.0, ErrorKind::InvalidArgument,
          "intensities must be nonnegative");

  double width = 2.0 * (v3 - v1) / std::cbrt(static_cast<double>(n));
  if (!(width > 0.0)) width = top > 0.0 ? top : 1.0;
  const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil(top / width)));
  width = std::max(top, width) / static_cast<double>(bins);
  if (top == 0.0) width = 1.0;

  IntensityHistogram h;
  h.polarizer = polarizer;
  h.counts.assign(bins, 0);
  h.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.bin_edges[i] = static_cast<double>(i) * width;
  for (double v : samples) {
    auto k = static_cast<std::size_t>(v / width);
    ++h.counts[std::min(k, bins - 1)];
  }
  return finish(std::move(h));
}

std::size_t histogram_mode(const IntensityHistogram& h) {
  std::size_t best = 0;
  double best_density = -1.0;
  for (std::size_t i = 0; i < h.bin_count(); ++i) {
    if (!h.fit_bin(i)) continue;
    if (h.density[i] > best_density) {
      best_density = h.density[i];
      best = i;
    }
  }
  return best;
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  require(!samples.empty(), ErrorKind::EmptyStack, "no samples for KS distance");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f),
                  std::abs(f - static_cast<double>(i) / n)});
  }
  return d;
}

double ks_distance_exponential(std::span<const double> samples, double mean) {
  require(mean > 0.0, ErrorKind::NonpositiveMean, "mean intensity must be positive");
  return ks_distance(samples, [mean](double x) { return thermal_cdf(x, mean, true); });
}

double ks_distance_two_sample(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorKind::EmptyStack, "no samples for KS distance");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(x.size()) -
                             static_cast<double>(j) / static_cast<double>(y.size())));
  }
  return d;
}

double normalized_variance(std::span<const double> samples) {
  require(samples.size() >= 2, ErrorKind::InvalidArgument, "need at least two samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  require(mean > 0.0, ErrorKind::NonpositiveMean, "mean intensity must be positive");
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  var /= static_cast<double>(samples.size() - 1);
  return var / (mean * mean);
}

double noisy_exponential_cdf(double x, double mean, double sigma, double offset) {
  const double t = x - offset;
  if (sigma <= 1e-12 * mean) return t > 0.0 ? -std::expm1(-t / mean) : 0.0;
  const double u = t / sigma;
  const double ratio = sigma / mean;
  const double tail = std::exp(-t / mean + 0.5 * ratio * ratio + log_normal_cdf(u - ratio));
  return std::clamp(normal_cdf(u) - tail, 0.0, 1.0);
}

StatsFitResult fit_noisy_exponential(const IntensityHistogram& h,
                                     std::optional<NoiseModel> noise_prior) {
  require(h.total_samples > 0 && h.bin_count() >= 4, ErrorKind::EmptyStack,
          "histogram is empty");
  const double total = static_cast<double>(h.total_samples);
  const auto occupied = std::count_if(h.counts.begin(), h.counts.end(),
                                      [](std::uint64_t c) { return c > 0; });
  if (occupied < 2) {
    throw Error(ErrorKind::DegenerateData, "all samples fall in one histogram bin");
  }

  // Moments of the exponentially modified Gaussian: mean = o + mu,
  // var = sigma^2 + mu^2, third central moment = 2 mu^3.
  double m1 = 0.0;
  for (std::size_t i = 0; i < h.bin_count(); ++i) m1 += h.center(i) * static_cast<double>(h.counts[i]);
  m1 /= total;
  double m2 = 0.0, m3 = 0.0;
  for (std::size_t i = 0; i < h.bin_count(); ++i) {
    const double d = h.center(i) - m1;
    m2 += d * d * static_cast<double>(h.counts[i]);
    m3 += d * d * d * static_cast<double>(h.counts[i]);
  }
  m2 /= total;
  m3 /= total;

  double mu0 = std::cbrt(std::max(m3, 0.0) / 2.0);
  if (!(mu0 > 0.0)) mu0 = std::sqrt(std::max(m2, 1e-12));
  double sigma0 = std::sqrt(std::max(m2 - mu0 * mu0, 0.0));
  double offset0 = m1 - mu0;
  if (noise_prior) {
    sigma0 = noise_prior->read_noise_sigma;
    offset0 = noise_prior->offset;
    mu0 = std::max(m1 - offset0, 1e-3 * std::sqrt(std::max(m2, 1e-12)));
  }
  const double upper_edge = h.bin_edges.back();
  if (upper_edge < offset0 + 5.0 * mu0) {
    throw Error(ErrorKind::InsufficientSpan,
                "histogram range ends at " + std::to_string(upper_edge) +
                    ", below offset + 5 * mean = " + std::to_string(offset0 + 5.0 * mu0));
  }

  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < h.bin_count(); ++i)
    if (h.fit_bin(i)) used.push_back(i);
  require(used.size() > 3, ErrorKind::InvalidArgument, "too few bins to fit three parameters");

  // Clip bins of camera data absorb everything beyond their outer edge.
  const auto cdf_at_edge = [&h](std::size_t e, const Eigen::VectorXd& p) {
    if (h.quantized && e == 0) return 0.0;
    if (h.quantized && e == h.bin_count()) return 1.0;
    return noisy_exponential_cdf(h.bin_edges[e], p[0], p[1], p[2]);
  };
  const auto bin_probability = [&cdf_at_edge](std::size_t i, const Eigen::VectorXd& p) {
    return cdf_at_edge(i + 1, p) - cdf_at_edge(i, p);
  };

  // Pass 1 weights by observed counts (Neyman), pass 2 by the pass-1 model (Pearson).
  std::vector<double> weights(used.size());
  for (std::size_t k = 0; k < used.size(); ++k)
    weights[k] = 1.0 / std::sqrt(std::max(static_cast<double>(h.counts[used[k]]), 1.0));

  const auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(used.size()));
    for (std::size_t k = 0; k < used.size(); ++k) {
      const double expected = total * bin_probability(used[k], p);
      r[static_cast<Eigen::Index>(k)] =
          (static_cast<double>(h.counts[used[k]]) - expected) * weights[k];
    }
    return r;
  };

  const double scale = std::max({std::abs(mu0), std::abs(offset0), 1.0});
  Eigen::VectorXd lower(3), upper(3), start(3);
  lower << 1e-9 * scale, 0.0, h.bin_edges.front() - 10.0 * scale;
  upper << 1e6 * scale, 1e3 * scale, upper_edge;
  start << mu0, sigma0, offset0;

  LmResult fit = levenberg_marquardt(residuals, start, lower, upper);
  if (fit.converged && std::isfinite(fit.chi2)) {
    for (std::size_t k = 0; k < used.size(); ++k) {
      const double expected = total * bin_probability(used[k], fit.parameters);
      weights[k] = 1.0 / std::sqrt(std::max(expected, 1.0));
    }
    fit = levenberg_marquardt(residuals, fit.parameters, lower, upper);
  }
  if (!fit.converged || !std::isfinite(fit.chi2) || !(fit.parameters[0] > 0.0)) {
    throw Error(ErrorKind::FitDiverged,
                "noisy exponential fit failed from start (mean=" + std::to_string(mu0) +
                    ", sigma=" + std::to_string(sigma0) + ", offset=" + std::to_string(offset0) +
                    "), chi2=" + std::to_string(fit.chi2) + " after " +
                    std::to_string(fit.iterations) + " iterations");
  }

  const Eigen::VectorXd& p = fit.parameters;
  StatsFitResult out;
  out.mean_gray = p[0];
  out.noise_sigma = p[1];
  out.noise_offset = p[2];
  out.mean_intensity = p[0] / h.gain;
  out.covariance = fit.covariance;
  out.iterations = fit.iterations;

  double pearson = 0.0;
  std::size_t dof_bins = 0;
  out.model_density.resize(h.bin_count());
  out.deconvolved_density.resize(h.bin_count());
  double cumulative = 0.0;
  for (std::size_t i = 0; i < h.bin_count(); ++i) {
    const double prob = bin_probability(i, p);
    out.model_density[i] = prob / h.width(i);
    const double above = h.center(i) - p[2];
    out.deconvolved_density[i] = above >= 0.0 ? std::exp(-above / p[0]) / p[0] : 0.0;
    cumulative += static_cast<double>(h.counts[i]) / total;
    out.ks_distance = std::max(
        out.ks_distance,
        std::abs(cumulative - cdf_at_edge(i + 1, p)));
    if (h.fit_bin(i) && prob * total > 0.0) {
      const double diff = static_cast<double>(h.counts[i]) - prob * total;
      pearson += diff * diff / (prob * total);
      ++dof_bins;
    }
  }
  out.chi2_per_dof = dof_bins > 3 ? pearson / static_cast<double>(dof_bins - 3)
                                  : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace speckle
