#include "speckle/correlation.hpp"

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

void require_optics(double aperture_radius, double wavelength, double z, double delta_r) {
  require(aperture_radius > 0.0 && wavelength > 0.0 && z > 0.0, ErrorKind::InvalidArgument,
          "aperture radius, wavelength and distance must be positive");
  require(delta_r >= 0.0, ErrorKind::InvalidArgument, "separation must be >= 0");
}

double airy(double chi) {
  if (std::abs(chi) < 1e-6) return 1.0 - chi * chi / 8.0;
  return 2.0 * std::cyl_bessel_j(1.0, chi) / chi;
}

// Least squares for g = C + V * basis with V >= 0, on whitened vectors.
struct LinearFit {
  double c = 0.0;
  double v = 0.0;
  double chi2 = std::numeric_limits<double>::infinity();
};

LinearFit fit_offset_modulation(const Eigen::VectorXd& ones, const Eigen::VectorXd& basis,
                                const Eigen::VectorXd& g) {
  LinearFit fit;
  const double s11 = ones.squaredNorm(), s1b = ones.dot(basis), sbb = basis.squaredNorm();
  const double s1g = ones.dot(g), sbg = basis.dot(g);
  const double det = s11 * sbb - s1b * s1b;
  if (det > 1e-12 * s11 * sbb) {
    fit.v = (s11 * sbg - s1b * s1g) / det;
    fit.c = (s1g - fit.v * s1b) / s11;
  }
  if (!(fit.v > 0.0)) {
    fit.v = 0.0;
    fit.c = s1g / s11;
  }
  fit.chi2 = (g - fit.c * ones - fit.v * basis).squaredNorm();
  return fit;
}

// Turns raw residuals into independent unit-variance ones: a Cholesky solve
// against the curve covariance, or division by the standard errors.
class Whitener {
 public:
  explicit Whitener(const CorrelationCurve& curve) {
    const auto n = static_cast<Eigen::Index>(curve.g2_values.size());
    // A covariance estimated from fewer frames than offsets is rank deficient.
    if (curve.covariance.rows() == n && curve.covariance.cols() == n &&
        curve.frames_used > 2 * static_cast<std::size_t>(n)) {
      llt_.compute(curve.covariance);
      correlated_ = llt_.info() == Eigen::Success && curve.covariance.diagonal().minCoeff() > 0.0;
    }
    if (correlated_) return;

    // Points without an error estimate borrow the median one.
    std::vector<double> positive;
    for (double s : curve.standard_errors)
      if (s > 0.0 && std::isfinite(s)) positive.push_back(s);
    double fallback = 1.0;
    if (!positive.empty()) {
      std::nth_element(positive.begin(), positive.begin() + static_cast<long>(positive.size() / 2),
                       positive.end());
      fallback = positive[positive.size() / 2];
    }
    sigma_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = curve.standard_errors[static_cast<std::size_t>(i)];
      sigma_[i] = (s > 0.0 && std::isfinite(s)) ? s : fallback;
    }
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const {
    if (correlated_) return llt_.matrixL().solve(v);
    return v.cwiseQuotient(sigma_);
  }

  bool correlated() const noexcept { return correlated_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd sigma_;
  bool correlated_ = false;
};

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  const double step = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  return out;
}

std::vector<double> lin_grid(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / static_cast<double>(n - 1);
  return out;
}

// chi at which 2 J1(chi) / chi falls to `level` inside the main lobe.
double airy_level_crossing(double level) {
  double lo = 0.0, hi = kBesselJ1FirstZero;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (airy(mid) > level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double gamma_airy(double delta_r, double aperture_radius, double wavelength, double z) {
  require_optics(aperture_radius, wavelength, z, delta_r);
  return airy(std::numbers::pi * aperture_radius * delta_r / (wavelength * z));
}

double g2_model_1tls(double delta_r, double aperture_radius, double wavelength, double z,
                     double offset_c, double modulation_v) {
  const double g = gamma_airy(delta_r, aperture_radius, wavelength, z);
  return offset_c + modulation_v * g * g;
}

double g2_model_2tls(double delta_r, double aperture_radius, double separation,
                     double wavelength, double z, double offset_c, double modulation_v) {
  require(separation >= 0.0, ErrorKind::InvalidArgument, "separation must be >= 0");
  const double g = std::cos(std::numbers::pi * separation * delta_r / (wavelength * z)) *
                   gamma_airy(delta_r, aperture_radius, wavelength, z);
  return offset_c + modulation_v * g * g;
}

double visibility(double offset_c, double modulation_v) {
  require(offset_c > 0.0 && modulation_v >= 0.0, ErrorKind::InvalidArgument,
          "visibility needs C > 0 and V >= 0");
  return modulation_v / (2.0 * offset_c + modulation_v);
}

// ---------------------------------------------------------------------------
// g2 estimator

G2Accumulator::G2Accumulator(std::size_t width, std::size_t x0, std::size_t max_offset,
                             G2EstimatorOptions options)
    : width_(width), x0_(x0), lanes_(max_offset + 1), options_(options) {
  require(x0 + max_offset < width, ErrorKind::InvalidArgument,
          "x0 + max_offset = " + std::to_string(x0 + max_offset) + " outside row of width " +
              std::to_string(width));
}

template <class T>
void G2Accumulator::accumulate(const Grid<T>& frame) {
  require(frame.cols() == width_, ErrorKind::ShapeMismatch, "frame width differs");
  const std::size_t base = sums_.size();
  sums_.resize(base + 3 * lanes_, 0.0);
  double* cross = sums_.data() + base;
  double* ref = cross + lanes_;
  double* moving = ref + lanes_;

  std::vector<double> counts(lanes_, 0.0);
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    const T* row = frame.row(r).data();
    if (!options_.stationary) {
      const double i0 = static_cast<double>(row[x0_]);
      for (std::size_t k = 0; k < lanes_; ++k) {
        const double ik = static_cast<double>(row[x0_ + k]);
        cross[k] += i0 * ik;
        ref[k] += i0;
        moving[k] += ik;
      }
      for (double& c : counts) c += 1.0;
    } else {
      for (std::size_t k = 0; k < lanes_; ++k) {
        for (std::size_t x = 0; x + k < width_; ++x) {
          const double a = static_cast<double>(row[x]);
          const double b = static_cast<double>(row[x + k]);
          cross[k] += a * b;
          ref[k] += a;
          moving[k] += b;
        }
        counts[k] += static_cast<double>(width_ - k);
      }
    }
  }
  if (frames_ == 0) {
    pair_counts_ = counts;
  } else {
    require(counts == pair_counts_, ErrorKind::ShapeMismatch, "frame height differs");
  }
  ++frames_;
}

void G2Accumulator::add(const Grid<double>& frame) { accumulate(frame); }
void G2Accumulator::add(const Grid<std::uint16_t>& frame) { accumulate(frame); }

void G2Accumulator::merge(const G2Accumulator& other) {
  require(other.width_ == width_ && other.x0_ == x0_ && other.lanes_ == lanes_ &&
              other.options_.stationary == options_.stationary,
          ErrorKind::ShapeMismatch, "cannot merge estimators with different lanes");
  if (other.frames_ == 0) return;
  if (frames_ == 0) pair_counts_ = other.pair_counts_;
  require(pair_counts_ == other.pair_counts_, ErrorKind::ShapeMismatch, "frame height differs");
  sums_.insert(sums_.end(), other.sums_.begin(), other.sums_.end());
  frames_ += other.frames_;
}

CorrelationCurve G2Accumulator::finish(double pixel_pitch) const {
  if (frames_ < 2) {
    throw Error(ErrorKind::InsufficientFrames,
                "g2 estimation needs at least 2 frames, got " + std::to_string(frames_));
  }
  std::vector<double> total(3 * lanes_, 0.0);
  for (std::size_t f = 0; f < frames_; ++f) {
    const double* s = sums_.data() + f * 3 * lanes_;
    for (std::size_t j = 0; j < 3 * lanes_; ++j) total[j] += s[j];
  }

  const auto ratio = [this](const double* s, std::size_t k, double n) {
    const double cross = s[k] / n;
    const double ref = s[lanes_ + k] / n;
    const double moving = s[2 * lanes_ + k] / n;
    return cross / (ref * moving);
  };

  CorrelationCurve curve;
  curve.x0_position = x0_;
  curve.frames_used = frames_;
  curve.pixel_pitch = pixel_pitch;
  curve.stationary = options_.stationary;
  for (std::size_t k = 0; k < lanes_; ++k) {
    if (!(total[lanes_ + k] > 0.0) || !(total[2 * lanes_ + k] > 0.0)) {
      throw Error(ErrorKind::ZeroMeanLane,
                  "lane at offset " + std::to_string(k) + " has zero mean intensity");
    }
  }
  const double fcount = static_cast<double>(frames_);
  const Eigen::Index lanes = static_cast<Eigen::Index>(lanes_);
  Eigen::MatrixXd theta(static_cast<Eigen::Index>(frames_), lanes);
  std::vector<double> leave_out(3 * lanes_);
  for (std::size_t f = 0; f < frames_; ++f) {
    const double* s = sums_.data() + f * 3 * lanes_;
    for (std::size_t j = 0; j < 3 * lanes_; ++j) leave_out[j] = total[j] - s[j];
    for (std::size_t k = 0; k < lanes_; ++k) {
      const double t = ratio(leave_out.data(), k, (fcount - 1.0) * pair_counts_[k]);
      // A frame carrying all of a lane's light leaves a zero-mean remainder.
      theta(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) = std::isfinite(t) ? t : 0.0;
    }
  }
  const Eigen::RowVectorXd mean = theta.colwise().mean();
  theta.rowwise() -= mean;
  curve.covariance = (fcount - 1.0) / fcount * (theta.transpose() * theta);
  for (std::size_t k = 0; k < lanes_; ++k) {
    const Eigen::Index e = static_cast<Eigen::Index>(k);
    curve.separations.push_back(static_cast<double>(k) * pixel_pitch);
    curve.g2_values.push_back(ratio(total.data(), k, fcount * pair_counts_[k]));
    curve.standard_errors.push_back(std::sqrt(std::max(curve.covariance(e, e), 0.0)));
  }
  return curve;
}

CorrelationCurve estimate_g2(const FrameStack& stack, std::size_t x0, std::size_t max_offset,
                             G2EstimatorOptions options) {
  if (stack.frames.empty()) throw Error(ErrorKind::InsufficientFrames, "frame stack is empty");
  stack.validate();
  G2Accumulator acc(stack.width(), x0, max_offset, options);
  for (const Frame& f : stack.frames) acc.add(f.pixels);
  CorrelationCurve curve = acc.finish(stack.meta.detector.pixel_pitch);
  curve.wavelength = stack.meta.fiber.wavelength;
  curve.distance_z = stack.meta.detector.distance_z;
  return curve;
}

CorrelationCurve estimate_g2(std::span<const Grid<double>> frames, double pixel_pitch,
                             std::size_t x0, std::size_t max_offset,
                             G2EstimatorOptions options) {
  if (frames.empty()) throw Error(ErrorKind::InsufficientFrames, "no frames");
  G2Accumulator acc(frames.front().cols(), x0, max_offset, options);
  for (const auto& f : frames) acc.add(f);
  return acc.finish(pixel_pitch);
}

// ---------------------------------------------------------------------------
// Siegert relation

SiegertAccumulator::SiegertAccumulator(std::size_t width, std::size_t x0, std::size_t max_offset)
    : width_(width),
      x0_(x0),
      lanes_(max_offset + 1),
      cross_(lanes_),
      ref_power_(lanes_, 0.0),
      moving_power_(lanes_, 0.0),
      intensity_product_(lanes_, 0.0) {
  require(x0 + max_offset < width, ErrorKind::InvalidArgument,
          "x0 + max_offset outside the detector row");
}

void SiegertAccumulator::add(const ComplexField& field) {
  require(field.grid.cols() == width_, ErrorKind::ShapeMismatch, "field width differs");
  for (std::size_t r = 0; r < field.grid.rows(); ++r) {
    const Complex* row = field.grid.row(r).data();
    const Complex e0 = row[x0_];
    const double p0 = std::norm(e0);
    const Complex e0c = std::conj(e0);
    for (std::size_t k = 0; k < lanes_; ++k) {
      const Complex ek = row[x0_ + k];
      const double pk = std::norm(ek);
      cross_[k] += e0c * ek;
      ref_power_[k] += p0;
      moving_power_[k] += pk;
      intensity_product_[k] += p0 * pk;
    }
    samples_ += 1.0;
  }
  ++realizations_;
}

void SiegertAccumulator::merge(const SiegertAccumulator& other) {
  require(other.width_ == width_ && other.x0_ == x0_ && other.lanes_ == lanes_,
          ErrorKind::ShapeMismatch, "cannot merge Siegert accumulators with different lanes");
  for (std::size_t k = 0; k < lanes_; ++k) {
    cross_[k] += other.cross_[k];
    ref_power_[k] += other.ref_power_[k];
    moving_power_[k] += other.moving_power_[k];
    intensity_product_[k] += other.intensity_product_[k];
  }
  samples_ += other.samples_;
  realizations_ += other.realizations_;
}

SiegertReport SiegertAccumulator::finish(double pixel_pitch) const {
  if (realizations_ < kMinSiegertRealizations) {
    throw Error(ErrorKind::InsufficientFrames,
                "Siegert check needs >= " + std::to_string(kMinSiegertRealizations) +
                    " realizations, got " + std::to_string(realizations_));
  }
  SiegertReport report;
  report.realizations = realizations_;
  for (std::size_t k = 0; k < lanes_; ++k) {
    const double p0 = ref_power_[k] / samples_;
    const double pk = moving_power_[k] / samples_;
    require(p0 > 0.0 && pk > 0.0, ErrorKind::ZeroMeanLane,
            "lane at offset " + std::to_string(k) + " has zero mean intensity");
    const double g2 = (intensity_product_[k] / samples_) / (p0 * pk);
    const double gamma = std::abs(cross_[k] / samples_) / std::sqrt(p0 * pk);
    const double dev = std::abs(g2 - (1.0 + gamma * gamma));
    report.separations.push_back(static_cast<double>(k) * pixel_pitch);
    report.g2.push_back(g2);
    report.gamma_abs.push_back(gamma);
    report.deviation.push_back(dev);
    report.max_deviation = std::max(report.max_deviation, dev);
  }
  return report;
}

SiegertReport siegert_check(std::span<const ComplexField> fields, std::size_t x0,
                            std::size_t max_offset) {
  if (fields.size() < kMinSiegertRealizations) {
    throw Error(ErrorKind::InsufficientFrames,
                "Siegert check needs >= " + std::to_string(kMinSiegertRealizations) +
                    " realizations, got " + std::to_string(fields.size()));
  }
  SiegertAccumulator acc(fields.front().grid.cols(), x0, max_offset);
  for (const auto& f : fields) acc.add(f);
  return acc.finish(fields.front().pitch);
}

// ---------------------------------------------------------------------------
// Model fitting

double fringe_frequency(const CorrelationCurve& curve, double min_cycles) {
  const std::size_t n = curve.g2_values.size();
  require(n >= 4, ErrorKind::InsufficientSpan, "curve too short for a fringe analysis");
  const double span = curve.separations.back();
  require(span > 0.0, ErrorKind::InsufficientSpan, "curve has zero span");

  // Mirrored samples: offset 0 once, every other offset twice.
  double mean = curve.g2_values[0];
  for (std::size_t i = 1; i < n; ++i) mean += 2.0 * curve.g2_values[i];
  mean /= static_cast<double>(2 * n - 1);

  const auto power = [&](double f) {
    double s = curve.g2_values[0] - mean;
    for (std::size_t i = 1; i < n; ++i) {
      s += 2.0 * (curve.g2_values[i] - mean) *
           std::cos(2.0 * std::numbers::pi * f * curve.separations[i]);
    }
    return s * s;
  };

  const double step_r = curve.separations[1] - curve.separations[0];
  const double f_lo = min_cycles / span;
  const double f_hi = 0.5 / step_r;
  require(f_lo < f_hi, ErrorKind::InsufficientSpan, "curve span too short for the search band");
  const double df = 1.0 / (16.0 * span);
  double best_f = f_lo, best_p = -1.0;
  for (double f = f_lo; f <= f_hi; f += df) {
    const double p = power(f);
    if (p > best_p) {
      best_p = p;
      best_f = f;
    }
  }
  // Golden-section refinement inside the winning cell.
  double a = std::max(f_lo, best_f - df), b = std::min(f_hi, best_f + df);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double pc = power(c), pd = power(d);
  for (int it = 0; it < 80; ++it) {
    if (pc > pd) {
      b = d;
      d = c;
      pd = pc;
      c = b - phi * (b - a);
      pc = power(c);
    } else {
      a = c;
      c = d;
      pc = pd;
      d = a + phi * (b - a);
      pd = power(d);
    }
  }
  return 0.5 * (a + b);
}

G2FitResult fit_g2(const CorrelationCurve& curve, G2Model model,
                   const std::optional<G2FitHints>& hints) {
  const std::size_t n = curve.g2_values.size();
  const bool two = model == G2Model::TwoTLS;
  const std::size_t params = two ? 4 : 3;
  require(curve.separations.size() == n && curve.standard_errors.size() == n,
          ErrorKind::InvalidArgument, "curve columns differ in length");
  const auto& r = curve.separations;
  const auto& g = curve.g2_values;
  if (n > 0) {
    const auto [gmin, gmax] = std::minmax_element(g.begin(), g.end());
    if (*gmax - *gmin <= 1e-9 * std::max(std::abs(*gmax), 1.0)) {
      throw Error(ErrorKind::DegenerateData,
                  "g2 curve is flat (" + std::to_string(*gmin) + "); no modulation to fit");
    }
  }
  require(curve.wavelength > 0.0 && curve.distance_z > 0.0, ErrorKind::InvalidArgument,
          "curve lacks wavelength / distance metadata");
  if (n <= params + 1) {
    throw Error(ErrorKind::InsufficientSpan, "curve has too few points for the model");
  }
  const double lz = curve.wavelength * curve.distance_z;

  const Whitener whiten(curve);
  const auto en = static_cast<Eigen::Index>(n);
  const Eigen::VectorXd ones_w = whiten(Eigen::VectorXd::Ones(en));
  const Eigen::VectorXd g_w = whiten(Eigen::Map<const Eigen::VectorXd>(g.data(), en));

  const auto basis_for = [&](double a, double d) {
    Eigen::VectorXd b(en);
    for (std::size_t i = 0; i < n; ++i) {
      double v = airy(std::numbers::pi * a * r[i] / lz);
      if (two) v *= std::cos(std::numbers::pi * d * r[i] / lz);
      b[static_cast<Eigen::Index>(i)] = v * v;
    }
    return b;
  };
  const auto profile = [&](double a, double d) {
    return fit_offset_modulation(ones_w, whiten(basis_for(a, d)), g_w);
  };

  // Offset from the tail, modulation from zero separation.
  const std::size_t tail = std::max<std::size_t>(n / 4, 2);
  double c0 = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) c0 += g[i];
  c0 /= static_cast<double>(tail);
  const double v0 = g[0] - c0;
  if (!(v0 > 0.0)) {
    throw Error(ErrorKind::DegenerateData, "g2 at zero separation does not exceed the baseline");
  }

  double d_start = 0.0;
  if (two) {
    d_start = hints && hints->separation ? *hints->separation : fringe_frequency(curve) * lz;
    if (r.back() * d_start / lz < 3.0) {
      throw Error(ErrorKind::InsufficientSpan,
                  "curve spans fewer than 3 fringes for separation " + std::to_string(d_start));
    }
  }

  double a_start = 0.0;
  if (hints && hints->aperture_radius) {
    a_start = *hints->aperture_radius;
  } else if (!two) {
    // Where |gamma|^2 first drops to 5% of the modulation.
    const double level = std::sqrt(0.05);
    std::size_t cross = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (g[i] - c0 < 0.05 * v0) {
        cross = i;
        break;
      }
    }
    if (cross == 0) {
      throw Error(ErrorKind::InsufficientSpan, "curve never decays to the baseline");
    }
    a_start = airy_level_crossing(level) * lz / (std::numbers::pi * r[cross]);
  } else {
    // Envelope zero anywhere between 2 samples and the end of the span.
    const double a_lo = kBesselJ1FirstZero * lz / (std::numbers::pi * r.back());
    const double a_hi = kBesselJ1FirstZero * lz / (std::numbers::pi * 2.0 * r[1]);
    double best = std::numeric_limits<double>::infinity();
    for (double a : log_grid(a_lo, a_hi, 300)) {
      const double chi2 = profile(a, d_start).chi2;
      if (chi2 < best) {
        best = chi2;
        a_start = a;
      }
    }
  }

  // Profile refinement: C and V are linear given (a, d).
  const auto refine_a = [&](double lo, double hi, double d) {
    double best = std::numeric_limits<double>::infinity(), best_a = lo;
    for (double a : log_grid(lo, hi, 301)) {
      const double chi2 = profile(a, d).chi2;
      if (chi2 < best) {
        best = chi2;
        best_a = a;
      }
    }
    return best_a;
  };
  a_start = refine_a(0.5 * a_start, 2.0 * a_start, d_start);
  if (two) {
    double best = std::numeric_limits<double>::infinity(), best_d = d_start;
    for (double d : lin_grid(0.95 * d_start, 1.05 * d_start, 401)) {
      const double chi2 = profile(a_start, d).chi2;
      if (chi2 < best) {
        best = chi2;
        best_d = d;
      }
    }
    d_start = best_d;
    a_start = refine_a(0.8 * a_start, 1.25 * a_start, d_start);
  }
  if (!two && kBesselJ1FirstZero * lz / (std::numbers::pi * a_start) > r.back()) {
    throw Error(ErrorKind::InsufficientSpan,
                "curve ends before the first envelope zero (" +
                    std::to_string(kBesselJ1FirstZero * lz / (std::numbers::pi * a_start)) +
                    " m)");
  }
  LinearFit lin = profile(a_start, d_start);
  if (hints && hints->offset_c) lin.c = *hints->offset_c;
  if (hints && hints->modulation_v) lin.v = *hints->modulation_v;

  Eigen::VectorXd start(static_cast<Eigen::Index>(params));
  Eigen::VectorXd lower(static_cast<Eigen::Index>(params)), upper(static_cast<Eigen::Index>(params));
  const double big = std::numeric_limits<double>::max();
  if (two) {
    start << a_start, d_start, lin.c, lin.v;
    lower << 1e-3 * a_start, 0.5 * d_start, 1e-12, 0.0;
    upper << 1e3 * a_start, 2.0 * d_start, big, big;
  } else {
    start << a_start, lin.c, lin.v;
    lower << 1e-3 * a_start, 1e-12, 0.0;
    upper << 1e3 * a_start, big, big;
  }

  const auto residuals = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    const double c = two ? p[2] : p[1];
    const double v = two ? p[3] : p[2];
    return g_w - c * ones_w - v * whiten(basis_for(p[0], two ? p[1] : 0.0));
  };

  const LmResult lm = levenberg_marquardt(residuals, start, lower, upper);
  if (!lm.converged || !std::isfinite(lm.chi2)) {
    throw Error(ErrorKind::FitDiverged,
                "g2 fit did not converge from a=" + std::to_string(a_start) +
                    (two ? ", d=" + std::to_string(d_start) : std::string()) +
                    ", C=" + std::to_string(lin.c) + ", V=" + std::to_string(lin.v) +
                    "; chi2=" + std::to_string(lm.chi2));
  }

  G2FitResult out;
  out.model = model;
  const Eigen::VectorXd& p = lm.parameters;
  out.aperture_radius = p[0];
  out.separation = two ? p[1] : 0.0;
  out.offset_c = two ? p[2] : p[1];
  out.modulation_v = two ? p[3] : p[2];
  if (!(out.offset_c > 0.0)) {
    throw Error(ErrorKind::FitDiverged, "fitted offset C is not positive");
  }
  out.visibility = visibility(out.offset_c, out.modulation_v);
  out.degrees_of_freedom = static_cast<int>(n - params);
  out.chi2_per_dof = lm.chi2 / out.degrees_of_freedom;
  out.iterations = lm.iterations;
  out.correlated_errors = whiten.correlated();
  out.covariance = lm.covariance;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    out.standard_errors.push_back(std::sqrt(std::max(lm.covariance(k, k), 0.0)));
  return out;
}

}  // namespace speckle
