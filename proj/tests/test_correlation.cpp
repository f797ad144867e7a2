#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "speckle/correlation.hpp"
#include "speckle/error.hpp"
#include "speckle/propagation.hpp"

using namespace speckle;

namespace {

constexpr double kWavelength = 633e-9;
constexpr double kDistance = 0.2;
constexpr double kPi = std::numbers::pi;

/// Power series for J1, accurate to double precision for |x| < 10.
double bessel_j1_series(double x) {
  double term = x / 2.0, sum = term;
  for (int k = 1; k < 60; ++k) {
    term *= -(x * x / 4.0) / (static_cast<double>(k) * static_cast<double>(k + 1));
    sum += term;
  }
  return sum;
}

CorrelationCurve synthetic_curve(std::size_t lanes, double pitch, double sigma, std::uint64_t seed,
                                 const std::function<double(double)>& model) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  CorrelationCurve c;
  c.pixel_pitch = pitch;
  c.wavelength = kWavelength;
  c.distance_z = kDistance;
  c.frames_used = 1000;
  for (std::size_t i = 0; i < lanes; ++i) {
    const double r = static_cast<double>(i) * pitch;
    c.separations.push_back(r);
    c.g2_values.push_back(model(r) + noise(eng));
    c.standard_errors.push_back(sigma);
  }
  return c;
}

std::vector<Grid<double>> exponential_frames(std::size_t count, std::size_t rows, std::size_t cols,
                                             std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::exponential_distribution<double> dist(1.0);
  std::vector<Grid<double>> out;
  for (std::size_t f = 0; f < count; ++f) {
    Grid<double> g(rows, cols);
    for (double& v : g) v = dist(eng);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

TEST_CASE("Airy coherence matches the Bessel series") {
  const double a = 100e-6;
  for (double chi : {0.1, 0.5, 1.0, kBesselJ1FirstZero / 2.0, 2.5, 3.0, 5.0, 7.5}) {
    const double dr = chi * kWavelength * kDistance / (kPi * a);
    CHECK(gamma_airy(dr, a, kWavelength, kDistance) ==
          doctest::Approx(2.0 * bessel_j1_series(chi) / chi).epsilon(1e-10));
  }
  CHECK(gamma_airy(0.0, a, kWavelength, kDistance) == 1.0);
  CHECK(gamma_airy(1e-15, a, kWavelength, kDistance) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS((void)gamma_airy(1e-3, 0.0, kWavelength, kDistance), Error);
  CHECK_THROWS_AS((void)gamma_airy(1e-3, a, kWavelength, -1.0), Error);
}

TEST_CASE("first Airy zero for a 100 um aperture is at 1.544 mm") {
  const double a = 100e-6;
  const double zero = kBesselJ1FirstZero * kWavelength * kDistance / (kPi * a);
  CHECK(zero == doctest::Approx(1.544e-3).epsilon(1e-3));
  CHECK(gamma_airy(zero * 0.999, a, kWavelength, kDistance) > 0.0);
  CHECK(gamma_airy(zero * 1.001, a, kWavelength, kDistance) < 0.0);
  CHECK(std::abs(gamma_airy(zero, a, kWavelength, kDistance)) < 1e-12);
}

TEST_CASE("g2 models and visibility") {
  const double a = 100e-6;
  CHECK(g2_model_1tls(0.0, a, kWavelength, kDistance, 1.0, 1.0) == 2.0);
  CHECK(g2_model_1tls(5e-3, a, kWavelength, kDistance, 1.0, 1.0) ==
        doctest::Approx(1.0).epsilon(0.01));
  CHECK(g2_model_2tls(0.0, a, 1e-3, kWavelength, kDistance, 1.0, 1.0) == 2.0);
  // The fringe factor vanishes at half a period.
  const double half_period = 0.5 * kWavelength * kDistance / 1e-3;
  CHECK(g2_model_2tls(half_period, a, 1e-3, kWavelength, kDistance, 1.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g2_model_2tls(2 * half_period, a, 1e-3, kWavelength, kDistance, 1.0, 1.0) ==
        doctest::Approx(g2_model_1tls(2 * half_period, a, kWavelength, kDistance, 1.0, 1.0)));
  // d = 0 reduces to the single-aperture model.
  CHECK(g2_model_2tls(7e-4, a, 0.0, kWavelength, kDistance, 0.9, 0.4) ==
        doctest::Approx(g2_model_1tls(7e-4, a, kWavelength, kDistance, 0.9, 0.4)));

  CHECK(visibility(1.0, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(visibility(1.0, 0.0) == 0.0);
  CHECK(visibility(0.5, 1e9) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS((void)visibility(0.0, 1.0), Error);
  CHECK_THROWS_AS((void)visibility(1.0, -0.1), Error);
}

TEST_CASE("constant frames give g2 of exactly one") {
  std::vector<Grid<double>> frames(5, Grid<double>(4, 32, 7.5));
  const CorrelationCurve c = estimate_g2(frames, 25e-6, 3, 20);
  REQUIRE(c.g2_values.size() == 21);
  for (std::size_t i = 0; i < 21; ++i) {
    CHECK(c.g2_values[i] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.standard_errors[i] == doctest::Approx(0.0).scale(1.0));
    CHECK(c.separations[i] == doctest::Approx(static_cast<double>(i) * 25e-6));
  }
}

TEST_CASE("uncorrelated exponential pixels give g2(0) = 2 and 1 elsewhere") {
  const auto frames = exponential_frames(200, 64, 40, 17);
  for (bool stationary : {false, true}) {
    const CorrelationCurve c = estimate_g2(frames, 1e-5, 2, 30, {stationary});
    CHECK(c.stationary == stationary);
    CHECK(c.frames_used == 200);
    CHECK(std::abs(c.g2_values[0] - 2.0) < 4.0 * c.standard_errors[0] + 1e-3);
    for (std::size_t i = 1; i < c.g2_values.size(); ++i) {
      CHECK(std::abs(c.g2_values[i] - 1.0) < 4.5 * c.standard_errors[i]);
    }
  }
}

TEST_CASE("g2 estimator is invariant to scaling and agrees across accumulators") {
  const auto frames = exponential_frames(30, 16, 50, 3);
  std::vector<Grid<double>> scaled = frames;
  for (auto& g : scaled)
    for (double& v : g) v *= 4.0;
  const CorrelationCurve a = estimate_g2(frames, 1e-5, 5, 40);
  const CorrelationCurve b = estimate_g2(scaled, 1e-5, 5, 40);
  CHECK(a.g2_values == b.g2_values);

  G2Accumulator first(50, 5, 40), second(50, 5, 40);
  for (std::size_t i = 0; i < frames.size(); ++i) (i < 12 ? first : second).add(frames[i]);
  first.merge(second);
  const CorrelationCurve merged = first.finish(1e-5);
  for (std::size_t i = 0; i < a.g2_values.size(); ++i) {
    CHECK(merged.g2_values[i] == doctest::Approx(a.g2_values[i]).epsilon(1e-14));
    CHECK(merged.standard_errors[i] == doctest::Approx(a.standard_errors[i]).epsilon(1e-12));
  }
  CHECK(merged.covariance.rows() == 41);
  CHECK(merged.covariance.diagonal().cwiseSqrt().isApprox(
      Eigen::Map<const Eigen::VectorXd>(a.standard_errors.data(), 41), 1e-12));
}

TEST_CASE("g2 of a mirrored frame at the mirrored reference equals the leftward curve") {
  // With x0 at the right end of the mirrored frame, offsets run back over the same pixels.
  const auto frames = exponential_frames(40, 8, 30, 9);
  std::vector<Grid<double>> mirrored;
  for (const auto& g : frames) {
    Grid<double> m(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) m(r, g.cols() - 1 - c) = g(r, c);
    mirrored.push_back(std::move(m));
  }
  // Pairs (x0 = 4, 4 + k) in the mirror are (25 - k, 25) in the original.
  const CorrelationCurve m = estimate_g2(mirrored, 1e-5, 4, 10);
  for (std::size_t k = 0; k <= 10; ++k) {
    double cross = 0, ref = 0, mov = 0;
    double n = 0;
    for (const auto& g : frames)
      for (std::size_t r = 0; r < g.rows(); ++r) {
        cross += g(r, 25) * g(r, 25 - k);
        ref += g(r, 25);
        mov += g(r, 25 - k);
        n += 1.0;
      }
    CHECK(m.g2_values[k] == doctest::Approx(cross * n / (ref * mov)).epsilon(1e-12));
  }
}

TEST_CASE("g2 accumulator errors") {
  CHECK_THROWS_AS(G2Accumulator(32, 10, 22), Error);
  G2Accumulator acc(32, 0, 10);
  acc.add(Grid<double>(2, 32, 1.0));
  try {
    (void)acc.finish(1e-5);
    FAIL("expected InsufficientFrames");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientFrames);
  }
  CHECK_THROWS_AS(acc.add(Grid<double>(2, 31, 1.0)), Error);
  G2Accumulator dark(32, 0, 10);
  dark.add(Grid<double>(2, 32, 0.0));
  dark.add(Grid<double>(2, 32, 0.0));
  try {
    (void)dark.finish(1e-5);
    FAIL("expected ZeroMeanLane");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroMeanLane);
  }
}

TEST_CASE("Siegert relation: deterministic fields deviate by one") {
  ComplexField f;
  f.grid = Grid<Complex>(2, 16, Complex{1.0, 0.5});
  SiegertAccumulator acc(16, 2, 8);
  for (std::size_t i = 0; i < kMinSiegertRealizations; ++i) acc.add(f);
  const SiegertReport rep = acc.finish(1e-5);
  CHECK(rep.realizations == kMinSiegertRealizations);
  for (std::size_t i = 0; i <= 8; ++i) {
    CHECK(rep.g2[i] == doctest::Approx(1.0));
    CHECK(rep.gamma_abs[i] == doctest::Approx(1.0));
  }
  CHECK(rep.max_deviation == doctest::Approx(1.0));

  SiegertAccumulator few(16, 2, 8);
  few.add(f);
  CHECK_THROWS_AS((void)few.finish(1e-5), Error);
}

TEST_CASE("Siegert relation holds for circular Gaussian fields") {
  std::mt19937_64 eng(99);
  std::normal_distribution<double> n01(0.0, 1.0);
  SiegertAccumulator acc(24, 0, 6);
  for (std::size_t i = 0; i < 4000; ++i) {
    // Moving average of white noise: known finite-range coherence.
    std::vector<Complex> w(30);
    for (auto& v : w) v = {n01(eng), n01(eng)};
    ComplexField f;
    f.grid = Grid<Complex>(1, 24);
    for (std::size_t c = 0; c < 24; ++c) f.grid(0, c) = w[c] + w[c + 1] + w[c + 2];
    acc.add(f);
  }
  const SiegertReport rep = acc.finish(1e-5);
  CHECK(rep.max_deviation < 0.1);
  CHECK(rep.gamma_abs[1] == doctest::Approx(2.0 / 3.0).epsilon(0.05));
  CHECK(rep.gamma_abs[3] < 0.06);
}

TEST_CASE("one-aperture fit recovers parameters from a noisy synthetic curve") {
  const double a = 100e-6, c0 = 1.0, v0 = 0.9;
  const double sigma = 0.01;
  const CorrelationCurve curve = synthetic_curve(150, 25e-6, sigma, 5, [&](double r) {
    return g2_model_1tls(r, a, kWavelength, kDistance, c0, v0);
  });
  const G2FitResult fit = fit_g2(curve, G2Model::OneTLS);
  CHECK_FALSE(fit.correlated_errors);
  CHECK(fit.degrees_of_freedom == 147);
  CHECK(std::abs(fit.aperture_radius - a) < 3.0 * fit.standard_errors[0]);
  CHECK(std::abs(fit.offset_c - c0) < 3.0 * fit.standard_errors[1]);
  CHECK(std::abs(fit.modulation_v - v0) < 3.0 * fit.standard_errors[2]);
  CHECK(fit.chi2_per_dof == doctest::Approx(1.0).epsilon(0.35));
  CHECK(fit.visibility == doctest::Approx(visibility(c0, v0)).epsilon(0.02));
}

TEST_CASE("two-aperture fit recovers the separation") {
  const double a = 100e-6, d = 1e-3;
  const CorrelationCurve curve = synthetic_curve(200, 10e-6, 0.01, 6, [&](double r) {
    return g2_model_2tls(r, a, d, kWavelength, kDistance, 1.0, 1.0);
  });
  CHECK(fringe_frequency(curve) == doctest::Approx(d / (kWavelength * kDistance)).epsilon(0.01));
  const G2FitResult fit = fit_g2(curve, G2Model::TwoTLS);
  CHECK(fit.model == G2Model::TwoTLS);
  CHECK(fit.separation == doctest::Approx(d).epsilon(0.003));
  CHECK(fit.aperture_radius == doctest::Approx(a).epsilon(0.03));
  CHECK(fit.visibility == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}

TEST_CASE("a full covariance switches the fit to correlated weights") {
  const double a = 100e-6;
  CorrelationCurve curve = synthetic_curve(80, 50e-6, 0.01, 8, [&](double r) {
    return g2_model_1tls(r, a, kWavelength, kDistance, 1.0, 1.0);
  });
  const auto n = static_cast<Eigen::Index>(curve.g2_values.size());
  curve.covariance = Eigen::MatrixXd::Identity(n, n) * 1e-4;
  curve.frames_used = 1000;
  const G2FitResult gls = fit_g2(curve, G2Model::OneTLS);
  CHECK(gls.correlated_errors);
  curve.covariance.resize(0, 0);
  const G2FitResult diag = fit_g2(curve, G2Model::OneTLS);
  CHECK_FALSE(diag.correlated_errors);
  CHECK(gls.aperture_radius == doctest::Approx(diag.aperture_radius).epsilon(1e-8));
}

TEST_CASE("fit failure modes") {
  CorrelationCurve flat = synthetic_curve(100, 25e-6, 0.0, 1, [](double) { return 1.0; });
  try {
    (void)fit_g2(flat, G2Model::OneTLS);
    FAIL("expected DegenerateData");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateData);
  }

  // Curve that ends before the envelope zero cannot fix the aperture size.
  const CorrelationCurve short_curve = synthetic_curve(20, 25e-6, 0.001, 2, [](double r) {
    return g2_model_1tls(r, 100e-6, kWavelength, kDistance, 1.0, 1.0);
  });
  try {
    (void)fit_g2(short_curve, G2Model::OneTLS);
    FAIL("expected InsufficientSpan");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientSpan);
  }

  CorrelationCurve no_meta = synthetic_curve(150, 25e-6, 0.01, 3, [](double r) {
    return g2_model_1tls(r, 100e-6, kWavelength, kDistance, 1.0, 1.0);
  });
  no_meta.wavelength = 0.0;
  CHECK_THROWS_AS((void)fit_g2(no_meta, G2Model::OneTLS), Error);
}
