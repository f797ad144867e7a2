#include <doctest.h>

#include <cmath>
#include <map>

#include "speckle/error.hpp"
#include "speckle/field_synth.hpp"
#include "speckle/propagation.hpp"
#include "speckle/sensor.hpp"

using namespace speckle;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Grid<double> constant_grid(std::size_t rows, std::size_t cols, double v) {
  return Grid<double>(rows, cols, v);
}

}  // namespace

TEST_CASE("noiseless capture rounds gain times intensity") {
  const DetectorSpec det{0.2, 25e-6, 5, 4, 8, 2.0};
  Grid<double> in(4, 5);
  for (std::size_t i = 0; i < in.size(); ++i) in.data()[i] = 0.37 * static_cast<double>(i);
  const Capture cap = capture(in, det, NoiseModel{}, {1, 7});
  for (std::size_t i = 0; i < in.size(); ++i) {
    CHECK(cap.frame.pixels.data()[i] == static_cast<std::uint16_t>(std::floor(2.0 * in.data()[i] + 0.5)));
  }
  CHECK(cap.frame.exposure_index == 7);
  CHECK(cap.frame.bit_depth == 8);
  CHECK_FALSE(cap.frame.saturation_flag);
  CHECK(cap.clipped_pixels == 0);
}

TEST_CASE("read noise on a dark frame is a rounded normal around the offset") {
  const DetectorSpec det{0.2, 25e-6, 400, 250, 8, 1.0};
  const NoiseModel noise{2.0, 10.0};
  const Capture cap = capture(constant_grid(250, 400, 0.0), det, noise, {3, 0});
  std::map<int, double> freq;
  double sum = 0.0, sum2 = 0.0;
  for (auto v : cap.frame.pixels) {
    freq[v] += 1.0;
    sum += v;
    sum2 += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(cap.frame.pixels.size());
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(mean == doctest::Approx(10.0).epsilon(0.002));
  CHECK(var == doctest::Approx(4.0 + 1.0 / 12.0).epsilon(0.02));
  for (int k = 4; k <= 16; ++k) {
    const double p = normal_cdf((k + 0.5 - 10.0) / 2.0) - normal_cdf((k - 0.5 - 10.0) / 2.0);
    CHECK(freq[k] / n == doctest::Approx(p).epsilon(4.0 * std::sqrt(p * (1 - p) / n) / p));
  }
  CHECK_FALSE(cap.frame.saturation_flag);
}

TEST_CASE("negative values clip to zero and are counted") {
  const DetectorSpec det{0.2, 25e-6, 200, 200, 8, 1.0};
  const Capture cap = capture(constant_grid(200, 200, 0.0), det, NoiseModel{2.0, 0.0}, {4, 0});
  double zeros = 0.0;
  for (auto v : cap.frame.pixels) zeros += v == 0 ? 1.0 : 0.0;
  const double n = 40000.0;
  CHECK(zeros / n == doctest::Approx(normal_cdf(0.25)).epsilon(0.02));
  CHECK(cap.frame.saturation_flag);
  CHECK(static_cast<double>(cap.clipped_pixels) / n ==
        doctest::Approx(normal_cdf(-0.25)).epsilon(0.03));
  CHECK(cap.saturation_warning());
}

TEST_CASE("gray level is monotone in intensity without noise") {
  const DetectorSpec det{0.2, 25e-6, 300, 2, 10, 3.3};
  Grid<double> in(2, 300);
  for (std::size_t i = 0; i < 300; ++i) in(0, i) = 1.5 * static_cast<double>(i);
  const Capture cap = capture(in, det, NoiseModel{0.0, 5.0}, {0, 0});
  for (std::size_t i = 1; i < 300; ++i) CHECK(cap.frame.pixels(0, i) >= cap.frame.pixels(0, i - 1));
  CHECK(cap.frame.pixels(0, 299) == 1023);
  CHECK(cap.frame.saturation_flag);
}

TEST_CASE("saturation warning needs more than 0.1 percent clipped pixels") {
  const DetectorSpec det{0.2, 25e-6, 100, 100, 8, 1.0};
  Grid<double> in = constant_grid(100, 100, 50.0);
  in(0, 0) = 1000.0;
  Capture cap = capture(in, det, NoiseModel{}, {0, 0});
  CHECK(cap.frame.saturation_flag);
  CHECK(cap.clipped_pixels == 1);
  CHECK_FALSE(cap.saturation_warning());
  for (std::size_t i = 0; i < 11; ++i) in.data()[i] = 1000.0;
  cap = capture(in, det, NoiseModel{}, {0, 0});
  CHECK(cap.clipped_pixels == 11);
  CHECK(cap.saturation_warning());
}

TEST_CASE("noise is deterministic per seed and frame") {
  const DetectorSpec det{0.2, 25e-6, 32, 32, 8, 1.0};
  const Grid<double> in = constant_grid(32, 32, 20.0);
  const NoiseModel noise{1.5, 3.0};
  CHECK(capture(in, det, noise, {5, 2}).frame == capture(in, det, noise, {5, 2}).frame);
  CHECK_FALSE(capture(in, det, noise, {5, 2}).frame.pixels ==
              capture(in, det, noise, {5, 3}).frame.pixels);
}

TEST_CASE("capture rejects mismatched shapes and invalid noise") {
  const DetectorSpec det{0.2, 25e-6, 32, 16, 8, 1.0};
  try {
    (void)capture(constant_grid(32, 16, 1.0), det, NoiseModel{}, {0, 0});
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }
  CHECK_THROWS_AS((void)capture(constant_grid(16, 32, 1.0), det, NoiseModel{-1.0, 0.0}, {0, 0}),
                  Error);
  CHECK_THROWS_AS((void)capture(constant_grid(16, 32, 1.0), det, NoiseModel{0.0, 256.0}, {0, 0}),
                  Error);
}

TEST_CASE("auto gain maps the mean intensity to the target gray level") {
  CHECK(auto_gain(25.0, 5.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS((void)auto_gain(25.0, 0.0), Error);
  CHECK_THROWS_AS((void)auto_gain(0.0, 1.0), Error);
}

TEST_CASE("summing two independent polarizations halves the normalized variance") {
  const SourceGeometry geom{SourceKind::OneSource, 20e-6, 0.0, std::nullopt};
  const SourcePlane base = rasterize_support(geom, 1e-6, 633e-9);
  FarFieldOptions opt;
  opt.allow_fresnel = true;
  const DetectorSpec det{0.2, 400e-6, 64, 64, 8, 1.0};
  const FarFieldPropagator prop(base, det, opt);
  double s1 = 0.0, s1sq = 0.0, s2 = 0.0, s2sq = 0.0, n = 0.0;
  for (std::uint64_t k = 0; k < 40; ++k) {
    const ComplexField a = prop.propagate(randomize_phases(base, {6, k}));
    const ComplexField b = prop.propagate(randomize_phases(base, {6, k}, true));
    const Grid<double> single = polarized_intensity(a, nullptr, PolarizationMode::SinglePol);
    const Grid<double> both = polarized_intensity(a, &b, PolarizationMode::UnpolarizedSum);
    for (std::size_t i = 0; i < single.size(); ++i) {
      s1 += single.data()[i];
      s1sq += single.data()[i] * single.data()[i];
      s2 += both.data()[i];
      s2sq += both.data()[i] * both.data()[i];
      n += 1.0;
    }
  }
  const double nv1 = (s1sq / n) / std::pow(s1 / n, 2) - 1.0;
  const double nv2 = (s2sq / n) / std::pow(s2 / n, 2) - 1.0;
  CHECK(nv1 == doctest::Approx(1.0).epsilon(0.05));
  CHECK(nv2 == doctest::Approx(0.5).epsilon(0.05));

  ComplexField a;
  a.grid = Grid<Complex>(2, 2);
  ComplexField b;
  b.grid = Grid<Complex>(2, 3);
  CHECK_THROWS_AS((void)polarized_intensity(a, &b, PolarizationMode::UnpolarizedSum), Error);
  CHECK_THROWS_AS((void)polarized_intensity(a, nullptr, PolarizationMode::UnpolarizedSum), Error);
}
