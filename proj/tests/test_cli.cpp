#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "speckle/cli.hpp"
#include "speckle/csv.hpp"

namespace fs = std::filesystem;
using speckle::cli::run;

namespace {

const char* kConfig = R"(fiber.core_radius = 20 um
fiber.numerical_aperture = 0.39
fiber.wavelength = 633 nm
source.kind = one
detector.distance = 20 cm
detector.pixel_pitch = 100 um
detector.width = 96
detector.height = 48
detector.gain = auto
detector.target_mean_gray = 25
noise.read_sigma = 1
noise.offset = 5
sim.frames = 300
sim.seed = 123
g2.x0 = 8
g2.max_offset = 80
fit.model = one
)";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("speckle_cli_" + std::to_string(std::rand()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("simulate, stats, g2, fit and report run end to end") {
  TempDir tmp;
  const fs::path conf = tmp.path / "run.conf";
  write(conf, kConfig);
  const fs::path a = tmp.path / "a", b = tmp.path / "b";

  REQUIRE(run({"simulate", "-c", conf.string(), "-o", a.string(), "-j", "1"}) == 0);
  CHECK(fs::exists(a / "stack.spkl"));
  CHECK(fs::exists(a / "config.used.txt"));
  REQUIRE(run({"simulate", "-c", conf.string(), "-o", b.string(), "-j", "2"}) == 0);
  CHECK(slurp(a / "stack.spkl") == slurp(b / "stack.spkl"));

  REQUIRE(run({"stats", (a / "stack.spkl").string(), "-o", a.string()}) == 0);
  CHECK(fs::exists(a / "histogram.csv"));
  CHECK(fs::exists(a / "histogram.svg"));
  CHECK(fs::exists(a / "stats_report.txt"));

  REQUIRE(run({"g2", (a / "stack.spkl").string(), "-o", a.string(), "--x0", "8", "--max-offset",
               "80", "-j", "2"}) == 0);
  // Offsets and model default to the values recorded from the run config.
  REQUIRE(run({"g2", (b / "stack.spkl").string(), "-o", b.string(), "-j", "1"}) == 0);
  CHECK(slurp(a / "g2_curve.csv") == slurp(b / "g2_curve.csv"));
  CHECK(fs::exists(a / "g2_curve.cov.csv"));
  const speckle::CsvTable curve = speckle::read_csv(a / "g2_curve.csv");
  CHECK(curve.rows.size() == 81);
  CHECK(curve.column("g2")[0] > 1.5);

  REQUIRE(run({"fit", (a / "g2_curve.csv").string(), "-o", a.string()}) == 0);
  CHECK(fs::exists(a / "g2_fit.txt"));
  const auto fit = speckle::parse_key_values(slurp(a / "g2_fit.kv"));
  CHECK(fit.at("model") == "one");
  // Fitted radius describes the facet diameter in this convention: 2 x 20 um.
  CHECK(std::stod(fit.at("aperture_radius_m")) == doctest::Approx(40e-6).epsilon(0.15));
  CHECK(fs::exists(a / "g2_fit.svg"));

  REQUIRE(run({"report", a.string(), "-o", a.string()}) == 0);
  const std::string summary = slurp(a / "summary.md");
  CHECK(summary.find("g2") != std::string::npos);
}

TEST_CASE("a flat curve is a fit failure") {
  TempDir tmp;
  std::string csv = "# wavelength_m=6.33e-07\n# distance_z_m=0.2\n# pixel_pitch_m=2.5e-05\n"
                    "separation_m,g2,standard_error\n";
  for (int i = 0; i < 100; ++i) csv += std::to_string(i * 25e-6) + ",1,0.01\n";
  write(tmp.path / "flat.csv", csv);
  CHECK(run({"fit", (tmp.path / "flat.csv").string(), "-o", tmp.path.string()}) ==
        speckle::cli::kFitFailure);
}

TEST_CASE("usage, config and file errors map to distinct exit codes") {
  TempDir tmp;
  CHECK(run({}) == speckle::cli::kUsageError);
  CHECK(run({"transmogrify"}) == speckle::cli::kUsageError);
  CHECK(run({"simulate"}) == speckle::cli::kUsageError);

  write(tmp.path / "bad.conf", "fiber.core_radius = 100\n");
  CHECK(run({"simulate", "-c", (tmp.path / "bad.conf").string(), "-o", tmp.path.string()}) ==
        speckle::cli::kUsageError);

  CHECK(run({"stats", (tmp.path / "missing.spkl").string(), "-o", tmp.path.string()}) ==
        speckle::cli::kIoError);
  write(tmp.path / "junk.spkl", "not a stack at all");
  CHECK(run({"g2", (tmp.path / "junk.spkl").string(), "-o", tmp.path.string()}) ==
        speckle::cli::kIoError);
}

TEST_CASE("output directory and thread count come from the environment") {
  TempDir tmp;
  const fs::path conf = tmp.path / "run.conf";
  write(conf, std::string(kConfig) + "");
  const fs::path out = tmp.path / "env_out";
  ::setenv("SPECKLE_OUTPUT_DIR", out.string().c_str(), 1);
  ::setenv("SPECKLE_THREADS", "2", 1);
  const int rc = run({"simulate", "-c", conf.string(), "--frames", "3"});
  ::unsetenv("SPECKLE_OUTPUT_DIR");
  ::unsetenv("SPECKLE_THREADS");
  CHECK(rc == 0);
  CHECK(fs::exists(out / "stack.spkl"));
}
