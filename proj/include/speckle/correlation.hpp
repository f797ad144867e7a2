#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "speckle/frame_stack.hpp"
#include "speckle/grid.hpp"
#include "speckle/propagation.hpp"

namespace speckle {

/// First zero of J1.
inline constexpr double kBesselJ1FirstZero = 3.8317059702075123;

/// Complex degree of coherence of a uniform disk of radius a seen from
/// distance z: 2 J1(chi) / chi, chi = pi a dr / (lambda z). Equals 1 at dr = 0.
double gamma_airy(double delta_r, double aperture_radius, double wavelength, double z);

/// C + V |2 J1(chi) / chi|^2. C = V = 1 is the ideal single-source g2.
double g2_model_1tls(double delta_r, double aperture_radius, double wavelength, double z,
                     double offset_c, double modulation_v);

/// C + V |cos(pi d dr / (lambda z)) 2 J1(chi) / chi|^2 for two disks whose
/// centers are d apart.
double g2_model_2tls(double delta_r, double aperture_radius, double separation,
                     double wavelength, double z, double offset_c, double modulation_v);

/// (g2_max - g2_min) / (g2_max + g2_min) of the fitted model, V / (2C + V).
double visibility(double offset_c, double modulation_v);

/// Empirical g2(x0, x0 + i) along detector rows, i = 0..max_offset.
struct CorrelationCurve {
  std::vector<double> separations;  ///< i * pixel_pitch, meters
  std::vector<double> g2_values;
  std::vector<double> standard_errors;  ///< jackknife over frames
  /// Jackknife covariance between offsets; empty when unknown. Neighbouring
  /// offsets share speckles, so their errors are strongly correlated.
  Eigen::MatrixXd covariance;
  std::size_t x0_position = 0;
  std::size_t frames_used = 0;
  double pixel_pitch = 0.0;
  double wavelength = 0.0;  ///< 0 when unknown
  double distance_z = 0.0;  ///< 0 when unknown
  bool stationary = false;
};

struct G2EstimatorOptions {
  /// Also average over every reference position x0 in the row (assumes the
  /// speckle statistics do not depend on absolute position).
  bool stationary = false;
};

/// Streaming estimator. Keeps per-frame sums of I(x0) I(xi), I(x0), I(xi) so
/// that the leave-one-frame-out jackknife can be formed at the end. Frames may
/// be accumulated in separate instances and combined with merge().
class G2Accumulator {
 public:
  G2Accumulator(std::size_t width, std::size_t x0, std::size_t max_offset,
                G2EstimatorOptions options = {});

  void add(const Grid<double>& frame);
  void add(const Grid<std::uint16_t>& frame);
  /// Appends the frames of `other` after this instance's frames.
  void merge(const G2Accumulator& other);

  std::size_t frames() const noexcept { return frames_; }

  /// Throws InsufficientFrames (< 2 frames) or ZeroMeanLane.
  CorrelationCurve finish(double pixel_pitch) const;

 private:
  template <class T>
  void accumulate(const Grid<T>& frame);

  std::size_t width_;
  std::size_t x0_;
  std::size_t lanes_;
  G2EstimatorOptions options_;
  std::size_t frames_ = 0;
  std::vector<double> pair_counts_;  ///< samples per lane per frame
  std::vector<double> sums_;         ///< per frame: cross[lanes], ref[lanes], moving[lanes]
};

CorrelationCurve estimate_g2(const FrameStack& stack, std::size_t x0, std::size_t max_offset,
                             G2EstimatorOptions options = {});
CorrelationCurve estimate_g2(std::span<const Grid<double>> frames, double pixel_pitch,
                             std::size_t x0, std::size_t max_offset,
                             G2EstimatorOptions options = {});

inline constexpr std::size_t kMinSiegertRealizations = 2000;

struct SiegertReport {
  std::vector<double> separations;
  std::vector<double> g2;         ///< from intensities
  std::vector<double> gamma_abs;  ///< |gamma_c| from field products
  std::vector<double> deviation;  ///< |g2 - (1 + |gamma_c|^2)|
  double max_deviation = 0.0;
  std::size_t realizations = 0;
};

/// Compares the intensity correlation with the field coherence on the same
/// ensemble. For a Gaussian field the two agree (g2 = 1 + |gamma|^2).
class SiegertAccumulator {
 public:
  SiegertAccumulator(std::size_t width, std::size_t x0, std::size_t max_offset);

  void add(const ComplexField& field);
  void merge(const SiegertAccumulator& other);
  std::size_t realizations() const noexcept { return realizations_; }

  /// Throws InsufficientFrames below kMinSiegertRealizations.
  SiegertReport finish(double pixel_pitch) const;

 private:
  std::size_t width_;
  std::size_t x0_;
  std::size_t lanes_;
  std::size_t realizations_ = 0;
  double samples_ = 0.0;
  std::vector<Complex> cross_;
  std::vector<double> ref_power_;
  std::vector<double> moving_power_;
  std::vector<double> intensity_product_;
};

SiegertReport siegert_check(std::span<const ComplexField> fields, std::size_t x0,
                            std::size_t max_offset);

enum class G2Model { OneTLS, TwoTLS };

/// Optional starting values; anything unset is estimated from the curve.
struct G2FitHints {
  std::optional<double> aperture_radius;
  std::optional<double> separation;
  std::optional<double> offset_c;
  std::optional<double> modulation_v;
};

struct G2FitResult {
  G2Model model = G2Model::OneTLS;
  double aperture_radius = 0.0;
  double separation = 0.0;  ///< TwoTLS only
  double offset_c = 0.0;
  double modulation_v = 0.0;
  double visibility = 0.0;
  double chi2_per_dof = 0.0;
  int degrees_of_freedom = 0;
  int iterations = 0;
  bool correlated_errors = false;  ///< weighted with the full curve covariance
  /// Parameter order (a, C, V) for OneTLS, (a, d, C, V) for TwoTLS.
  Eigen::MatrixXd covariance;
  std::vector<double> standard_errors;
};

/// Weighted least squares of the one- or two-source model. Uses the full
/// covariance when the curve carries one (generalized least squares), else
/// weights 1 / se^2.
/// Throws InsufficientSpan, FitDiverged, or DegenerateData (flat curve).
G2FitResult fit_g2(const CorrelationCurve& curve, G2Model model,
                   const std::optional<G2FitHints>& hints = std::nullopt);

/// Dominant modulation frequency (cycles per meter) of g2 - mean, from the
/// discrete-time Fourier transform of the curve mirrored about zero separation.
/// Searches frequencies that give at least `min_cycles` over the curve span.
double fringe_frequency(const CorrelationCurve& curve, double min_cycles = 3.0);

}  // namespace speckle
