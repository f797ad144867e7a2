#include <doctest.h>

#include <filesystem>

#include "speckle/csv.hpp"
#include "speckle/error.hpp"
#include "speckle/svg_plot.hpp"

using namespace speckle;

TEST_CASE("CSV tables round trip with metadata") {
  CsvTable t;
  t.metadata["wavelength_m"] = "6.33e-07";
  t.metadata["note"] = "two words";
  t.header = {"x", "y"};
  t.rows = {{0.0, 1.0 / 3.0}, {1e-6, -2.5e10}};
  const CsvTable back = parse_csv(format_csv(t));
  CHECK(back.metadata == t.metadata);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("y") == std::vector<double>{1.0 / 3.0, -2.5e10});
  CHECK_THROWS_AS((void)back.column("z"), Error);
}

TEST_CASE("malformed CSV reports the line") {
  try {
    (void)parse_csv("a,b\n1,2\n3\n");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IoError);
    CHECK(std::string(e.what()).find('3') != std::string::npos);
  }
  CHECK_THROWS_AS((void)parse_csv("a,b\n1,zz\n"), Error);
}

TEST_CASE("correlation curves and covariances survive a CSV round trip") {
  CorrelationCurve c;
  c.separations = {0.0, 25e-6, 50e-6};
  c.g2_values = {2.0, 1.5, 1.1};
  c.standard_errors = {0.01, 0.02, 0.03};
  c.pixel_pitch = 25e-6;
  c.wavelength = 633e-9;
  c.distance_z = 0.2;
  c.frames_used = 500;
  c.x0_position = 64;
  c.stationary = true;
  const CorrelationCurve back = curve_from_table(parse_csv(format_csv(curve_table(c))));
  CHECK(back.separations == c.separations);
  CHECK(back.g2_values == c.g2_values);
  CHECK(back.standard_errors == c.standard_errors);
  CHECK(back.pixel_pitch == c.pixel_pitch);
  CHECK(back.wavelength == c.wavelength);
  CHECK(back.distance_z == c.distance_z);
  CHECK(back.frames_used == 500);
  CHECK(back.x0_position == 64);
  CHECK(back.stationary);

  Eigen::MatrixXd cov(3, 3);
  cov << 1e-4, 2e-5, 0, 2e-5, 4e-4, 1e-6, 0, 1e-6, 9e-4;
  CHECK(covariance_from_table(parse_csv(format_csv(covariance_table(cov)))) == cov);
  CHECK(covariance_path("run/g2_curve.csv") == std::filesystem::path("run/g2_curve.cov.csv"));
}

TEST_CASE("key value text round trips") {
  const std::map<std::string, std::string> kv{{"a", "1"}, {"b.c", "x y"}};
  CHECK(parse_key_values(format_key_values(kv)) == kv);
}

TEST_CASE("SVG plot contains series, labels and error bars") {
  Plot p;
  p.title = "g2 <curve>";
  p.x_label = "separation (um)";
  p.y_label = "g2";
  p.x_scale = 1e6;
  PlotSeries s;
  s.label = "data";
  s.x = {0.0, 1e-5, 2e-5};
  s.y = {2.0, 1.5, 1.0};
  s.y_error = {0.1, 0.1, 0.1};
  s.style = SeriesStyle::Markers;
  p.series.push_back(s);
  PlotSeries m = s;
  m.label = "model";
  m.y_error.clear();
  m.style = SeriesStyle::Line;
  p.series.push_back(m);
  const std::string svg = render_svg(p);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("g2 &lt;curve&gt;") != std::string::npos);
  CHECK(svg.find("separation (um)") != std::string::npos);
  CHECK(svg.find("model") != std::string::npos);
  CHECK(svg.find("<path") != std::string::npos);

  Plot log_plot = p;
  log_plot.log_y = true;
  log_plot.series[0].y = {100.0, 10.0, 0.0};
  CHECK_NOTHROW((void)render_svg(log_plot));
}
