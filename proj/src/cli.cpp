#include "speckle/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "speckle/correlation.hpp"
#include "speckle/csv.hpp"
#include "speckle/frame_stack.hpp"
#include "speckle/photon_stats.hpp"
#include "speckle/run_config.hpp"
#include "speckle/simulator.hpp"
#include "speckle/svg_plot.hpp"

namespace speckle::cli {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ConfigError:
      return kUsageError;
    case ErrorKind::IoError:
    case ErrorKind::BadMagic:
    case ErrorKind::VersionMismatch:
    case ErrorKind::TruncatedFile:
    case ErrorKind::ChecksumMismatch:
      return kIoError;
    case ErrorKind::FitDiverged:
    case ErrorKind::DegenerateData:
      return kFitFailure;
    case ErrorKind::InvalidArgument:
    case ErrorKind::LatticeTooCoarse:
    case ErrorKind::FresnelRegime:
    case ErrorKind::FovTooSmall:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::NonpositiveMean:
    case ErrorKind::EmptyStack:
    case ErrorKind::InsufficientFrames:
    case ErrorKind::ZeroMeanLane:
    case ErrorKind::InsufficientSpan:
      return kInvalidInput;
  }
  return kGenericFailure;
}

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

struct Common {
  std::string out_dir;
  std::size_t threads = 0;
  bool threads_set = false;
};

fs::path output_dir(const Common& c) {
  fs::path dir = !c.out_dir.empty() ? fs::path(c.out_dir) : fs::path(env("SPECKLE_OUTPUT_DIR").value_or("."));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create output directory " + dir.string());
  return dir;
}

std::size_t thread_count(const Common& c, std::size_t config_threads) {
  if (c.threads_set) return resolve_threads(c.threads);
  if (const auto e = env("SPECKLE_THREADS")) {
    try {
      return resolve_threads(std::stoul(*e));
    } catch (const std::exception&) {
      throw Error(ErrorKind::ConfigError, "SPECKLE_THREADS is not a number: '" + *e + "'");
    }
  }
  return resolve_threads(config_threads);
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> frames;
};

int simulate(const SimulateArgs& args, const Common& common) {
  RunConfig config = load_run_config(args.config);
  if (args.seed) config.master_seed = *args.seed;
  if (args.frames) config.frames = *args.frames;
  validate(config);
  const fs::path dir = output_dir(common);
  const SpeckleSimulator sim(config);
  SimulationSummary summary;
  const FrameStack stack = simulate_stack(sim, thread_count(common, config.threads), &summary);
  write_stack(stack, dir / "stack.spkl");
  write_text(dir / "config.used.txt", format_run_config(config));

  std::cout << "frames " << stack.frames.size() << " of " << stack.width() << "x" << stack.height()
            << ", " << sim.support().subsource_count_active << " subsources, gain "
            << fmt(sim.detector().gain) << "\n";
  if (summary.saturation_warnings > 0) {
    std::cerr << "warning: " << summary.saturation_warnings
              << " frames clip more than 0.1% of their pixels\n";
  }
  std::cout << "wrote " << (dir / "stack.spkl").string() << "\n";
  return kOk;
}

// --- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string stack;
};

int stats(const StatsArgs& args, const Common& common) {
  const FrameStack stack = read_stack(args.stack);
  const fs::path dir = output_dir(common);
  const bool polarizer = stack.meta.polarization == PolarizationMode::SinglePol;
  const IntensityHistogram h = histogram(stack, polarizer);
  const StatsFitResult fit = fit_noisy_exponential(h, stack.meta.noise);
  const std::size_t mode = histogram_mode(h);

  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < h.bin_count(); ++i) {
    const double c = static_cast<double>(h.counts[i]);
    sum += c * h.center(i);
    sum_sq += c * h.center(i) * h.center(i);
  }
  const double n = static_cast<double>(h.total_samples);
  const double mean_gray = sum / n;
  const double var_gray = sum_sq / n - mean_gray * mean_gray;
  // Relative to the fitted dark level; read noise adds sigma^2 to the variance.
  const double signal = mean_gray - fit.noise_offset;
  const double normalized_var = (var_gray - fit.noise_sigma * fit.noise_sigma) / (signal * signal);

  write_csv(histogram_table(h, &fit), dir / "histogram.csv");

  Plot plot;
  plot.title = "Intensity histogram";
  plot.x_label = "gray level";
  plot.y_label = "probability density";
  plot.log_y = true;
  PlotSeries data{"data", {}, {}, {}, SeriesStyle::Markers, "#1f77b4"};
  PlotSeries model{"noisy exponential fit", {}, {}, {}, SeriesStyle::Line, "#d62728"};
  PlotSeries clean{"deconvolved exponential", {}, {}, {}, SeriesStyle::Line, "#2ca02c"};
  for (std::size_t i = 0; i < h.bin_count(); ++i) {
    if (!h.fit_bin(i)) continue;
    data.x.push_back(h.center(i));
    data.y.push_back(h.density[i]);
    model.x.push_back(h.center(i));
    model.y.push_back(fit.model_density[i]);
    clean.x.push_back(h.center(i));
    clean.y.push_back(fit.deconvolved_density[i]);
  }
  plot.series = {data, model, clean};
  write_svg(plot, dir / "histogram.svg");

  std::map<std::string, std::string> kv = {
      {"frames", std::to_string(stack.frames.size())},
      {"samples", std::to_string(h.total_samples)},
      {"polarizer", polarizer ? "true" : "false"},
      {"gain", format_double(h.gain)},
      {"empirical_mean_gray", format_double(mean_gray)},
      {"empirical_normalized_variance", format_double(normalized_var)},
      {"fit.mean_gray", format_double(fit.mean_gray)},
      {"fit.mean_intensity", format_double(fit.mean_intensity)},
      {"fit.noise_sigma", format_double(fit.noise_sigma)},
      {"fit.noise_offset", format_double(fit.noise_offset)},
      {"fit.chi2_per_dof", format_double(fit.chi2_per_dof)},
      {"fit.ks_distance", format_double(fit.ks_distance)},
      {"fit.iterations", std::to_string(fit.iterations)},
      {"fit.mean_gray_stderr", format_double(std::sqrt(fit.covariance(0, 0)))},
      {"fit.noise_sigma_stderr", format_double(std::sqrt(fit.covariance(1, 1)))},
      {"fit.noise_offset_stderr", format_double(std::sqrt(fit.covariance(2, 2)))},
      {"histogram_mode_gray", format_double(h.center(mode))},
      {"histogram_mode_above_offset", format_double(h.center(mode) - fit.noise_offset)},
      {"clipped_low", std::to_string(h.clipped_low())},
      {"clipped_high", std::to_string(h.clipped_high())},
  };
  write_text(dir / "stats_report.kv", format_key_values(kv));

  std::ostringstream txt;
  txt << "Photon statistics\n"
      << "  frames                 " << stack.frames.size() << "\n"
      << "  samples                " << h.total_samples << "\n"
      << "  reference law          " << (polarizer ? "exponential (polarizer)" : "2-dof gamma (no polarizer)") << "\n"
      << "  empirical mean gray    " << fmt(mean_gray) << "\n"
      << "  normalized variance    " << fmt(normalized_var) << "\n"
      << "Noisy exponential fit\n"
      << "  mean above offset      " << fmt(fit.mean_gray) << " gray  (intensity " << fmt(fit.mean_intensity) << ")\n"
      << "  noise sigma            " << fmt(fit.noise_sigma) << " gray\n"
      << "  offset                 " << fmt(fit.noise_offset) << " gray\n"
      << "  chi2 / dof             " << fmt(fit.chi2_per_dof) << "\n"
      << "  KS distance            " << fmt(fit.ks_distance) << "\n"
      << "  histogram mode         " << fmt(h.center(mode)) << " gray ("
      << fmt(h.center(mode) - fit.noise_offset) << " above offset)\n"
      << "  clipped pixels         " << h.clipped_low() << " low, " << h.clipped_high() << " high\n";
  write_text(dir / "stats_report.txt", txt.str());
  std::cout << txt.str();
  return kOk;
}

// --- g2 --------------------------------------------------------------------

struct G2Args {
  std::string stack;
  std::optional<std::size_t> x0;
  std::optional<std::size_t> max_offset;
  bool stationary = false;
};

CorrelationCurve g2_parallel(const FrameStack& stack, std::size_t x0, std::size_t max_offset,
                             G2EstimatorOptions options, std::size_t threads) {
  if (stack.frames.empty()) throw Error(ErrorKind::InsufficientFrames, "frame stack is empty");
  stack.validate();
  const std::size_t count = stack.frames.size();
  threads = std::min(threads, count);
  std::vector<G2Accumulator> parts(threads, G2Accumulator(stack.width(), x0, max_offset, options));
  parallel_chunks(threads, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      for (std::size_t i = count * t / threads; i < count * (t + 1) / threads; ++i) {
        parts[t].add(stack.frames[i].pixels);
      }
    }
  });
  for (std::size_t t = 1; t < threads; ++t) parts[0].merge(parts[t]);
  CorrelationCurve curve = parts[0].finish(stack.meta.detector.pixel_pitch);
  curve.wavelength = stack.meta.fiber.wavelength;
  curve.distance_z = stack.meta.detector.distance_z;
  return curve;
}

Plot curve_plot(const CorrelationCurve& curve) {
  Plot plot;
  plot.title = "Intensity correlation g2";
  plot.x_label = "separation |x0 - xi| (um)";
  plot.y_label = "g2";
  plot.x_scale = 1e6;
  plot.series.push_back({"data", curve.separations, curve.g2_values, curve.standard_errors,
                         SeriesStyle::Markers, "#1f77b4"});
  return plot;
}

int g2(const G2Args& args, const Common& common) {
  const FrameStack stack = read_stack(args.stack);
  const fs::path dir = output_dir(common);
  const std::size_t width = stack.width();
  const auto stored = [&stack](const std::string& key) -> std::optional<std::size_t> {
    const auto it = stack.meta.extra.find("analysis." + key);
    if (it == stack.meta.extra.end()) return std::nullopt;
    return static_cast<std::size_t>(std::stoull(it->second));
  };
  const std::size_t x0 = args.x0 ? *args.x0 : stored("g2_x0").value_or(width / 4);
  if (x0 >= width) {
    throw Error(ErrorKind::InvalidArgument, "x0 = " + std::to_string(x0) + " outside row of width " +
                                                std::to_string(width));
  }
  const std::size_t max_offset =
      args.max_offset ? *args.max_offset : stored("g2_max_offset").value_or(width - 1 - x0);
  const bool stationary = args.stationary || stack.meta.extra.contains("analysis.g2_stationary");
  const CorrelationCurve curve =
      g2_parallel(stack, x0, max_offset, {stationary}, thread_count(common, 0));
  CsvTable table = curve_table(curve);
  if (const auto it = stack.meta.extra.find("analysis.fit_model"); it != stack.meta.extra.end()) {
    table.metadata["fit_model"] = it->second;
  }
  write_csv(table, dir / "g2_curve.csv");
  write_csv(covariance_table(curve.covariance), covariance_path(dir / "g2_curve.csv"));
  write_svg(curve_plot(curve), dir / "g2_curve.svg");
  std::cout << "g2(0) = " << fmt(curve.g2_values.front()) << " +- " << fmt(curve.standard_errors.front(), 2)
            << " over " << curve.frames_used << " frames, " << curve.g2_values.size() << " offsets\n";
  std::cout << "wrote " << (dir / "g2_curve.csv").string() << "\n";
  return kOk;
}

// --- fit -------------------------------------------------------------------

struct FitArgs {
  std::string curve;
  std::string model;  ///< empty: the curve's fit_model metadata, else auto
  std::optional<double> wavelength;
  std::optional<double> distance;
  std::optional<double> radius_hint;
  std::optional<double> separation_hint;
  std::string covariance;
  bool no_covariance = false;
};

int fit(const FitArgs& args, const Common& common) {
  const CsvTable table = read_csv(args.curve);
  CorrelationCurve curve = curve_from_table(table);
  std::string model_name = args.model;
  if (model_name.empty()) {
    const auto it = table.metadata.find("fit_model");
    model_name = it != table.metadata.end() ? it->second : "auto";
  }
  const fs::path cov = args.covariance.empty() ? covariance_path(args.curve) : fs::path(args.covariance);
  if (!args.no_covariance && (fs::exists(cov) || !args.covariance.empty())) {
    curve.covariance = covariance_from_table(read_csv(cov));
    if (curve.covariance.rows() != static_cast<Eigen::Index>(curve.g2_values.size())) {
      throw Error(ErrorKind::ShapeMismatch, "covariance " + cov.string() + " does not match the curve");
    }
  }
  if (args.wavelength) curve.wavelength = *args.wavelength;
  if (args.distance) curve.distance_z = *args.distance;
  const fs::path dir = output_dir(common);

  G2Model model = G2Model::OneTLS;
  if (model_name == "two") {
    model = G2Model::TwoTLS;
  } else if (model_name == "auto") {
    // A second source shows up as fringes inside the envelope.
    try {
      const double f = fringe_frequency(curve);
      const double lz = curve.wavelength * curve.distance_z;
      const G2FitResult one = fit_g2(curve, G2Model::OneTLS);
      const double envelope_zero = kBesselJ1FirstZero * lz / (std::numbers::pi * one.aperture_radius);
      if (one.chi2_per_dof > 4.0 && 1.0 / f < 0.5 * envelope_zero) model = G2Model::TwoTLS;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::DegenerateData) throw;
    }
  }

  G2FitHints hints;
  hints.aperture_radius = args.radius_hint;
  hints.separation = args.separation_hint;
  const G2FitResult r = fit_g2(curve, model, hints);
  const bool two = model == G2Model::TwoTLS;
  const double lz = curve.wavelength * curve.distance_z;

  std::map<std::string, std::string> kv = {
      {"model", two ? "two" : "one"},
      {"aperture_radius_m", format_double(r.aperture_radius)},
      {"aperture_radius_stderr_m", format_double(r.standard_errors[0])},
      {"offset_c", format_double(r.offset_c)},
      {"modulation_v", format_double(r.modulation_v)},
      {"visibility", format_double(r.visibility)},
      {"chi2_per_dof", format_double(r.chi2_per_dof)},
      {"degrees_of_freedom", std::to_string(r.degrees_of_freedom)},
      {"iterations", std::to_string(r.iterations)},
      {"weights", r.correlated_errors ? "full_covariance" : "diagonal"},
      {"g2_at_zero", format_double(curve.g2_values.front())},
      {"envelope_first_zero_m", format_double(kBesselJ1FirstZero * lz / (std::numbers::pi * r.aperture_radius))},
  };
  if (two) {
    kv["separation_m"] = format_double(r.separation);
    kv["separation_stderr_m"] = format_double(r.standard_errors[1]);
    kv["fringe_period_fit_m"] = format_double(lz / r.separation);
    kv["fringe_period_empirical_m"] = format_double(1.0 / fringe_frequency(curve));
  }
  write_text(dir / "g2_fit.kv", format_key_values(kv));

  std::ostringstream txt;
  txt << "g2 fit (" << (two ? "two sources" : "one source") << ")\n"
      << "  aperture radius a      " << fmt(r.aperture_radius * 1e6) << " +- " << fmt(r.standard_errors[0] * 1e6, 2) << " um\n";
  if (two) {
    txt << "  separation d           " << fmt(r.separation * 1e3) << " +- " << fmt(r.standard_errors[1] * 1e3, 2) << " mm\n"
        << "  fringe period          " << fmt(lz / r.separation * 1e6) << " um (fit), "
        << fmt(1e6 / fringe_frequency(curve)) << " um (spectrum)\n";
  }
  const std::size_t ci = two ? 2 : 1;
  txt << "  offset C               " << fmt(r.offset_c) << " +- " << fmt(r.standard_errors[ci], 2) << "\n"
      << "  modulation V           " << fmt(r.modulation_v) << " +- " << fmt(r.standard_errors[ci + 1], 2) << "\n"
      << "  visibility V/(2C+V)    " << fmt(r.visibility) << "\n"
      << "  chi2 / dof             " << fmt(r.chi2_per_dof) << " (" << r.degrees_of_freedom << " dof, "
      << (r.correlated_errors ? "full covariance" : "diagonal weights") << ")\n";
  write_text(dir / "g2_fit.txt", txt.str());

  Plot plot = curve_plot(curve);
  PlotSeries line{"fit", {}, {}, {}, SeriesStyle::Line, "#d62728"};
  const double r_max = curve.separations.back();
  for (int i = 0; i <= 1000; ++i) {
    const double x = r_max * i / 1000.0;
    line.x.push_back(x);
    line.y.push_back(two ? g2_model_2tls(x, r.aperture_radius, r.separation, curve.wavelength,
                                         curve.distance_z, r.offset_c, r.modulation_v)
                         : g2_model_1tls(x, r.aperture_radius, curve.wavelength, curve.distance_z,
                                         r.offset_c, r.modulation_v));
  }
  plot.series.push_back(line);
  write_svg(plot, dir / "g2_fit.svg");
  std::cout << txt.str();
  return kOk;
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  std::string run_dir;
};

int report(const ReportArgs& args, const Common& common) {
  const fs::path run = args.run_dir;
  if (!fs::is_directory(run)) throw Error(ErrorKind::IoError, "no such run directory " + run.string());
  const fs::path dir = common.out_dir.empty() && !env("SPECKLE_OUTPUT_DIR") ? run : output_dir(common);

  std::ostringstream md;
  md << "# Speckle run summary\n\n";
  bool any = false;
  const auto section = [&](const char* title, const char* file, const char* svg) {
    if (!fs::exists(run / file)) return;
    any = true;
    md << "## " << title << "\n\n| key | value |\n|---|---|\n";
    for (const auto& [k, v] : parse_key_values(read_text(run / file))) md << "| " << k << " | " << v << " |\n";
    md << "\n";
    if (fs::exists(run / svg)) md << "![" << title << "](" << svg << ")\n\n";
  };
  if (fs::exists(run / "stack.spkl")) {
    any = true;
    const FrameStack stack = read_stack(run / "stack.spkl");
    md << "## Frame stack\n\n| key | value |\n|---|---|\n";
    md << "| frames | " << stack.frames.size() << " |\n| size | " << stack.width() << " x " << stack.height() << " |\n";
    for (const auto& [k, v] : meta_to_map(stack.meta, {})) md << "| " << k << " | " << v << " |\n";
    md << "\n";
  }
  section("Photon statistics", "stats_report.kv", "histogram.svg");
  section("g2 fit", "g2_fit.kv", "g2_fit.svg");
  if (fs::exists(run / "g2_curve.csv") && !fs::exists(run / "g2_fit.kv")) {
    any = true;
    const CorrelationCurve c = curve_from_table(read_csv(run / "g2_curve.csv"));
    md << "## g2 curve\n\n" << c.g2_values.size() << " offsets from x0 = " << c.x0_position
       << ", g2(0) = " << fmt(c.g2_values.front()) << "\n\n![g2](g2_curve.svg)\n\n";
  }
  if (!any) throw Error(ErrorKind::IoError, "no run outputs found in " + run.string());
  write_text(dir / "summary.md", md.str());
  std::cout << "wrote " << (dir / "summary.md").string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Fiber pseudothermal light source: speckle simulation and analysis"};
  app.require_subcommand(1);
  Common common;
  const auto add_common = [&common](CLI::App* sub, bool threads) {
    sub->add_option("-o,--out", common.out_dir, "output directory (env SPECKLE_OUTPUT_DIR)");
    if (threads) {
      sub->add_option_function<std::size_t>(
          "-j,--threads", [&common](std::size_t n) { common.threads = n, common.threads_set = true; },
          "worker threads, 0 = all cores (env SPECKLE_THREADS)");
    }
  };

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "simulate a frame stack from a run config");
  sim->add_option("-c,--config", sim_args.config, "run config file")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", sim_args.seed, "override sim.seed");
  sim->add_option("--frames", sim_args.frames, "override sim.frames");
  add_common(sim, true);

  StatsArgs stats_args;
  CLI::App* st = app.add_subcommand("stats", "intensity histogram and noisy exponential fit");
  st->add_option("stack", stats_args.stack, "frame stack (.spkl)")->required();
  add_common(st, false);

  G2Args g2_args;
  CLI::App* g2c = app.add_subcommand("g2", "two-point intensity correlation along detector rows");
  g2c->add_option("stack", g2_args.stack, "frame stack (.spkl)")->required();
  g2c->add_option("--x0", g2_args.x0, "reference column (default width/4)");
  g2c->add_option("--max-offset", g2_args.max_offset, "largest offset in pixels (default: to row end)");
  g2c->add_flag("--stationary", g2_args.stationary, "also average over reference positions");
  add_common(g2c, true);

  FitArgs fit_args;
  std::string wavelength_text, distance_text, radius_text, separation_text;
  CLI::App* ft = app.add_subcommand("fit", "fit the one- or two-source model to a g2 curve CSV");
  ft->add_option("curve", fit_args.curve, "g2 curve CSV")->required();
  ft->add_option("-m,--model", fit_args.model, "one, two or auto (default: from the curve, else auto)")
      ->check(CLI::IsMember({"one", "two", "auto"}));
  ft->add_option("--wavelength", wavelength_text, "override wavelength, e.g. 633nm");
  ft->add_option("--distance", distance_text, "override distance z, e.g. 20cm");
  ft->add_option("--radius-hint", radius_text, "starting aperture radius");
  ft->add_option("--separation-hint", separation_text, "starting source separation");
  ft->add_option("--covariance", fit_args.covariance, "curve covariance CSV (default: <curve>.cov.csv if present)");
  ft->add_flag("--diagonal", fit_args.no_covariance, "ignore the covariance, weight by 1/se^2 only");
  add_common(ft, false);

  ReportArgs report_args;
  CLI::App* rp = app.add_subcommand("report", "summarize a run directory as Markdown");
  rp->add_option("run_dir", report_args.run_dir, "directory with run outputs")->required();
  add_common(rp, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }

  try {
    if (*sim) return simulate(sim_args, common);
    if (*st) return stats(stats_args, common);
    if (*g2c) return g2(g2_args, common);
    if (*ft) {
      if (!wavelength_text.empty()) fit_args.wavelength = parse_length(wavelength_text);
      if (!distance_text.empty()) fit_args.distance = parse_length(distance_text);
      if (!radius_text.empty()) fit_args.radius_hint = parse_length(radius_text);
      if (!separation_text.empty()) fit_args.separation_hint = parse_length(separation_text);
      return fit(fit_args, common);
    }
    if (*rp) return report(report_args, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGenericFailure;
  }
  return kGenericFailure;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace speckle::cli
