#include "speckle/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "speckle/error.hpp"
#include "speckle/frame_stack.hpp"

namespace speckle {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

// Splits "12.5 um" / "12.5um" into number and suffix.
std::pair<double, std::string_view> split_number(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr == text.data()) {
    fail("expected a number, got '" + std::string(text) + "'");
  }
  return {value, trim(text.substr(static_cast<std::size_t>(ptr - text.data())))};
}

double with_unit(std::string_view text, const std::map<std::string_view, double>& units,
                 const char* what) {
  const auto [value, unit] = split_number(text);
  if (unit.empty()) {
    fail(std::string(what) + " '" + std::string(trim(text)) + "' needs a unit suffix");
  }
  const auto it = units.find(unit);
  if (it == units.end()) {
    fail("unknown " + std::string(what) + " unit '" + std::string(unit) + "'");
  }
  return value * it->second;
}

double plain_number(std::string_view text) {
  const auto [value, rest] = split_number(text);
  if (!rest.empty()) fail("unexpected trailing text '" + std::string(rest) + "'");
  return value;
}

std::uint64_t plain_unsigned(std::string_view text) {
  text = trim(text);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail("expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

bool plain_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  fail("expected true or false, got '" + std::string(text) + "'");
}

std::string length_text(double meters) { return format_double(meters) + " m"; }
std::string time_text(double seconds) { return format_double(seconds) + " s"; }

struct Setter {
  std::function<void(RunConfig&, std::string_view)> apply;
};

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"fiber.core_radius", {[](RunConfig& c, std::string_view v) { c.fiber.core_radius = parse_length(v); }}},
      {"fiber.numerical_aperture", {[](RunConfig& c, std::string_view v) { c.fiber.numerical_aperture = plain_number(v); }}},
      {"fiber.wavelength", {[](RunConfig& c, std::string_view v) { c.fiber.wavelength = parse_length(v); }}},
      {"fiber.n1", {[](RunConfig& c, std::string_view v) {
         if (!c.fiber.refractive_indices) c.fiber.refractive_indices = RefractiveIndices{};
         c.fiber.refractive_indices->core = plain_number(v);
       }}},
      {"fiber.n2", {[](RunConfig& c, std::string_view v) {
         if (!c.fiber.refractive_indices) c.fiber.refractive_indices = RefractiveIndices{};
         c.fiber.refractive_indices->cladding = plain_number(v);
       }}},
      {"source.kind", {[](RunConfig& c, std::string_view v) {
         v = trim(v);
         if (v == "one") c.geometry.kind = SourceKind::OneSource;
         else if (v == "two") c.geometry.kind = SourceKind::TwoSources;
         else fail("expected one or two, got '" + std::string(v) + "'");
       }}},
      {"source.aperture_radius", {[](RunConfig& c, std::string_view v) { c.geometry.aperture_radius = parse_length(v); }}},
      {"source.separation", {[](RunConfig& c, std::string_view v) { c.geometry.separation = parse_length(v); }}},
      {"source.lattice_pitch", {[](RunConfig& c, std::string_view v) {
         if (trim(v) == "auto") c.geometry.lattice_pitch.reset();
         else c.geometry.lattice_pitch = parse_length(v);
       }}},
      {"detector.distance", {[](RunConfig& c, std::string_view v) { c.detector.distance_z = parse_length(v); }}},
      {"detector.pixel_pitch", {[](RunConfig& c, std::string_view v) { c.detector.pixel_pitch = parse_length(v); }}},
      {"detector.width", {[](RunConfig& c, std::string_view v) { c.detector.width_px = plain_unsigned(v); }}},
      {"detector.height", {[](RunConfig& c, std::string_view v) { c.detector.height_px = plain_unsigned(v); }}},
      {"detector.bit_depth", {[](RunConfig& c, std::string_view v) { c.detector.bit_depth = static_cast<int>(plain_unsigned(v)); }}},
      {"detector.gain", {[](RunConfig& c, std::string_view v) {
         if (trim(v) == "auto") c.gain.reset();
         else c.gain = plain_number(v);
       }}},
      {"detector.target_mean_gray", {[](RunConfig& c, std::string_view v) { c.target_mean_gray = plain_number(v); }}},
      {"noise.read_sigma", {[](RunConfig& c, std::string_view v) { c.noise.read_noise_sigma = plain_number(v); }}},
      {"noise.offset", {[](RunConfig& c, std::string_view v) { c.noise.offset = plain_number(v); }}},
      {"sim.frames", {[](RunConfig& c, std::string_view v) { c.frames = plain_unsigned(v); }}},
      {"sim.seed", {[](RunConfig& c, std::string_view v) { c.master_seed = plain_unsigned(v); }}},
      {"sim.polarization", {[](RunConfig& c, std::string_view v) {
         v = trim(v);
         if (v == "single") c.polarization = PolarizationMode::SinglePol;
         else if (v == "unpolarized") c.polarization = PolarizationMode::UnpolarizedSum;
         else fail("expected single or unpolarized, got '" + std::string(v) + "'");
       }}},
      {"sim.pad_factor", {[](RunConfig& c, std::string_view v) { c.far_field.pad_factor = static_cast<int>(plain_unsigned(v)); }}},
      {"sim.allow_fresnel", {[](RunConfig& c, std::string_view v) { c.far_field.allow_fresnel = plain_bool(v); }}},
      {"sim.sampling", {[](RunConfig& c, std::string_view v) {
         v = trim(v);
         if (v == "auto") c.far_field.mode = SamplingMode::Auto;
         else if (v == "fft") c.far_field.mode = SamplingMode::FftSelect;
         else if (v == "matrix") c.far_field.mode = SamplingMode::MatrixDft;
         else fail("expected auto, fft or matrix, got '" + std::string(v) + "'");
       }}},
      {"sim.threads", {[](RunConfig& c, std::string_view v) { c.threads = plain_unsigned(v); }}},
      {"acquisition.frame_interval", {[](RunConfig& c, std::string_view v) { c.frame_interval_s = parse_time(v); }}},
      {"acquisition.exposure", {[](RunConfig& c, std::string_view v) { c.exposure_time_s = parse_time(v); }}},
      {"run.created_utc", {[](RunConfig& c, std::string_view v) { c.created_utc = std::string(trim(v)); }}},
      {"g2.x0", {[](RunConfig& c, std::string_view v) {
         if (trim(v) == "auto") c.g2_x0.reset();
         else c.g2_x0 = plain_unsigned(v);
       }}},
      {"g2.max_offset", {[](RunConfig& c, std::string_view v) {
         if (trim(v) == "auto") c.g2_max_offset.reset();
         else c.g2_max_offset = plain_unsigned(v);
       }}},
      {"g2.stationary", {[](RunConfig& c, std::string_view v) { c.g2_stationary = plain_bool(v); }}},
      {"fit.model", {[](RunConfig& c, std::string_view v) {
         v = trim(v);
         if (v == "auto") c.fit_model.reset();
         else if (v == "one") c.fit_model = G2Model::OneTLS;
         else if (v == "two") c.fit_model = G2Model::TwoTLS;
         else fail("expected auto, one or two, got '" + std::string(v) + "'");
       }}},
  };
  return table;
}

}  // namespace

double parse_length(std::string_view text) {
  static const std::map<std::string_view, double> units = {
      {"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}, {"um", 1e-6}, {"\xC2\xB5m", 1e-6}, {"nm", 1e-9}};
  return with_unit(text, units, "length");
}

double parse_time(std::string_view text) {
  static const std::map<std::string_view, double> units = {
      {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"\xC2\xB5s", 1e-6}};
  return with_unit(text, units, "time");
}

RunConfig parse_run_config(std::string_view text, const std::string& origin) {
  RunConfig config;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(where + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) fail(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) fail(where + key + ": duplicate key");
    if (value.empty()) fail(where + key + ": missing value");
    try {
      it->second.apply(config, value);
    } catch (const Error& e) {
      fail(where + key + ": " + e.detail());
    }
  }
  if (!seen.count("source.aperture_radius")) config.geometry.aperture_radius = config.fiber.core_radius;
  if (config.fiber.refractive_indices && !seen.count("fiber.numerical_aperture")) {
    if (!seen.count("fiber.n1") || !seen.count("fiber.n2")) {
      fail(origin + ": fiber.n1 and fiber.n2 must be given together");
    }
    config.fiber.numerical_aperture = numerical_aperture(*config.fiber.refractive_indices);
  }
  try {
    validate(config);
  } catch (const Error& e) {
    fail(origin + ": " + e.detail());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.string());
}

void validate(const RunConfig& config) {
  config.fiber.validate();
  config.geometry.validate();
  config.detector.validate();
  config.noise.validate(config.detector.bit_depth);
  require(config.frames >= 1, ErrorKind::ConfigError, "sim.frames must be >= 1");
  require(config.far_field.pad_factor >= 1, ErrorKind::ConfigError, "sim.pad_factor must be >= 1");
  require(!config.gain || *config.gain > 0.0, ErrorKind::ConfigError, "detector.gain must be positive");
  require(config.target_mean_gray > 0.0, ErrorKind::ConfigError,
          "detector.target_mean_gray must be positive");
  if (config.g2_x0 || config.g2_max_offset) {
    const auto width = static_cast<std::size_t>(config.detector.width_px);
    const std::size_t x0 = config.g2_x0.value_or(width / 4);
    const std::size_t reach = x0 + config.g2_max_offset.value_or(0);
    require(reach < width, ErrorKind::ConfigError,
            "g2.x0 + g2.max_offset = " + std::to_string(reach) + " lies outside the detector row");
  }
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream out;
  const auto line = [&out](const char* key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  line("fiber.core_radius", length_text(c.fiber.core_radius));
  line("fiber.numerical_aperture", format_double(c.fiber.numerical_aperture));
  line("fiber.wavelength", length_text(c.fiber.wavelength));
  if (c.fiber.refractive_indices) {
    line("fiber.n1", format_double(c.fiber.refractive_indices->core));
    line("fiber.n2", format_double(c.fiber.refractive_indices->cladding));
  }
  line("source.kind", c.geometry.kind == SourceKind::OneSource ? "one" : "two");
  line("source.aperture_radius", length_text(c.geometry.aperture_radius));
  line("source.separation", length_text(c.geometry.separation));
  line("source.lattice_pitch", c.geometry.lattice_pitch ? length_text(*c.geometry.lattice_pitch) : "auto");
  line("detector.distance", length_text(c.detector.distance_z));
  line("detector.pixel_pitch", length_text(c.detector.pixel_pitch));
  line("detector.width", std::to_string(c.detector.width_px));
  line("detector.height", std::to_string(c.detector.height_px));
  line("detector.bit_depth", std::to_string(c.detector.bit_depth));
  line("detector.gain", c.gain ? format_double(*c.gain) : "auto");
  line("detector.target_mean_gray", format_double(c.target_mean_gray));
  line("noise.read_sigma", format_double(c.noise.read_noise_sigma));
  line("noise.offset", format_double(c.noise.offset));
  line("sim.frames", std::to_string(c.frames));
  line("sim.seed", std::to_string(c.master_seed));
  line("sim.polarization", c.polarization == PolarizationMode::SinglePol ? "single" : "unpolarized");
  line("sim.pad_factor", std::to_string(c.far_field.pad_factor));
  line("sim.allow_fresnel", c.far_field.allow_fresnel ? "true" : "false");
  line("sim.sampling", c.far_field.mode == SamplingMode::Auto        ? "auto"
                       : c.far_field.mode == SamplingMode::FftSelect ? "fft"
                                                                     : "matrix");
  line("sim.threads", std::to_string(c.threads));
  line("acquisition.frame_interval", time_text(c.frame_interval_s));
  line("acquisition.exposure", time_text(c.exposure_time_s));
  line("run.created_utc", c.created_utc);
  line("g2.x0", c.g2_x0 ? std::to_string(*c.g2_x0) : "auto");
  line("g2.max_offset", c.g2_max_offset ? std::to_string(*c.g2_max_offset) : "auto");
  line("g2.stationary", c.g2_stationary ? "true" : "false");
  line("fit.model", !c.fit_model                        ? "auto"
                    : *c.fit_model == G2Model::OneTLS ? "one"
                                                      : "two");
  return out.str();
}

}  // namespace speckle
