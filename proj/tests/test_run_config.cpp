#include <doctest.h>

#include <string>

#include "speckle/error.hpp"
#include "speckle/run_config.hpp"

using namespace speckle;

namespace {

std::string config_error(const std::string& text) {
  try {
    (void)parse_run_config(text, "test.conf");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    return e.what();
  }
  FAIL("expected ConfigError");
  return {};
}

}  // namespace

TEST_CASE("lengths and times need explicit units") {
  CHECK(parse_length("100 um") == doctest::Approx(100e-6));
  CHECK(parse_length("100µm") == doctest::Approx(100e-6));
  CHECK(parse_length("633nm") == doctest::Approx(633e-9));
  CHECK(parse_length("0.2 m") == doctest::Approx(0.2));
  CHECK(parse_length("20 cm") == doctest::Approx(0.2));
  CHECK(parse_length("1.5mm") == doctest::Approx(1.5e-3));
  CHECK_THROWS_AS((void)parse_length("100"), Error);
  CHECK_THROWS_AS((void)parse_length("100 furlongs"), Error);
  CHECK_THROWS_AS((void)parse_length("um"), Error);
  CHECK(parse_time("10 ms") == doctest::Approx(0.01));
  CHECK(parse_time("3us") == doctest::Approx(3e-6));
  CHECK(parse_time("2 s") == doctest::Approx(2.0));
  CHECK_THROWS_AS((void)parse_time("5"), Error);
}

TEST_CASE("a full config parses into the expected values") {
  const RunConfig c = parse_run_config(R"(# comment
fiber.core_radius = 50 um
fiber.numerical_aperture = 0.22
fiber.wavelength = 532 nm
source.kind = two
source.aperture_radius = 40 um
source.separation = 0.5 mm
source.lattice_pitch = 5 um
detector.distance = 30 cm
detector.pixel_pitch = 10 um
detector.width = 128
detector.height = 64
detector.bit_depth = 12
detector.gain = 3.5
noise.read_sigma = 1.5
noise.offset = 20
sim.frames = 50
sim.seed = 77
sim.polarization = unpolarized
sim.sampling = matrix
acquisition.frame_interval = 20 ms
g2.x0 = 10
g2.max_offset = 100
g2.stationary = true
fit.model = two
)");
  CHECK(c.fiber.core_radius == doctest::Approx(50e-6));
  CHECK(c.fiber.wavelength == doctest::Approx(532e-9));
  CHECK(c.geometry.kind == SourceKind::TwoSources);
  CHECK(c.geometry.separation == doctest::Approx(0.5e-3));
  CHECK(*c.geometry.lattice_pitch == doctest::Approx(5e-6));
  CHECK(c.detector.distance_z == doctest::Approx(0.3));
  CHECK(c.detector.width_px == 128);
  CHECK(c.detector.bit_depth == 12);
  CHECK(*c.gain == 3.5);
  CHECK(c.noise.read_noise_sigma == 1.5);
  CHECK(c.polarization == PolarizationMode::UnpolarizedSum);
  CHECK(c.far_field.mode == SamplingMode::MatrixDft);
  CHECK(c.frames == 50);
  CHECK(c.master_seed == 77);
  CHECK(c.frame_interval_s == doctest::Approx(0.02));
  CHECK(*c.g2_x0 == 10);
  CHECK(*c.g2_max_offset == 100);
  CHECK(c.g2_stationary);
  CHECK(*c.fit_model == G2Model::TwoTLS);
}

TEST_CASE("format and parse round trip") {
  RunConfig c;
  c.geometry = SourceGeometry{SourceKind::TwoSources, 80e-6, 1e-3, 10e-6};
  c.gain = 2.25;
  c.noise = NoiseModel{2.0, 10.0};
  c.polarization = PolarizationMode::UnpolarizedSum;
  c.g2_x0 = 32;
  c.fit_model = G2Model::OneTLS;
  c.exposure_time_s = 1e-4;
  CHECK(parse_run_config(format_run_config(c)) == c);
  CHECK(parse_run_config(format_run_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("aperture radius defaults to the core radius and indices give the NA") {
  const RunConfig c = parse_run_config("fiber.core_radius = 30 um\nfiber.n1 = 1.5\nfiber.n2 = 1.45\n");
  CHECK(c.geometry.aperture_radius == doctest::Approx(30e-6));
  CHECK(c.fiber.numerical_aperture == doctest::Approx(std::sqrt(1.5 * 1.5 - 1.45 * 1.45)));
}

TEST_CASE("config errors name the file, line and key") {
  const std::string unknown = config_error("sim.frames = 10\nfiber.core_radus = 1 um\n");
  CHECK(unknown.find("test.conf:2") != std::string::npos);
  CHECK(unknown.find("fiber.core_radus") != std::string::npos);

  const std::string dup = config_error("sim.frames = 10\nsim.frames = 20\n");
  CHECK(dup.find("test.conf:2") != std::string::npos);

  const std::string unitless = config_error("\n\nfiber.core_radius = 100\n");
  CHECK(unitless.find("test.conf:3") != std::string::npos);

  (void)config_error("no equals sign here\n");
  (void)config_error("source.kind = three\n");
  (void)config_error("sim.frames = -4\n");
  (void)config_error("detector.width = 12.5\n");
}

TEST_CASE("validation rejects inconsistent configurations") {
  RunConfig c;
  CHECK_NOTHROW(validate(c));
  c.frames = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = RunConfig{};
  c.g2_x0 = 200;
  c.g2_max_offset = 100;
  CHECK_THROWS_AS(validate(c), Error);
  c = RunConfig{};
  c.geometry = SourceGeometry{SourceKind::TwoSources, 100e-6, 150e-6, std::nullopt};
  CHECK_THROWS_AS(validate(c), Error);
}
