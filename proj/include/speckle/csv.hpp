#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "speckle/correlation.hpp"
#include "speckle/photon_stats.hpp"

namespace speckle {

/// Comma-separated table with optional leading "# key=value" metadata lines.
/// Numbers use '.' and shortest round-trip formatting regardless of locale.
struct CsvTable {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column by header name; throws InvalidArgument when absent.
  std::vector<double> column(const std::string& name) const;
};

std::string format_csv(const CsvTable& table);
/// Throws IoError naming the line on malformed input.
CsvTable parse_csv(const std::string& text);
void write_csv(const CsvTable& table, const std::filesystem::path& path);
CsvTable read_csv(const std::filesystem::path& path);

/// bin_center, density, model_density, deconvolved_density. The model columns
/// are empty (written as nan) when no fit is given.
CsvTable histogram_table(const IntensityHistogram& h, const StatsFitResult* fit);

/// separation_m, g2, standard_error with wavelength, distance and pitch metadata.
CsvTable curve_table(const CorrelationCurve& curve);
CorrelationCurve curve_from_table(const CsvTable& table);

/// Square matrix with columns cov_0 .. cov_{n-1}.
CsvTable covariance_table(const Eigen::MatrixXd& covariance);
Eigen::MatrixXd covariance_from_table(const CsvTable& table);
/// Where the g2 command puts the covariance of `curve_path`: stem + ".cov.csv".
std::filesystem::path covariance_path(const std::filesystem::path& curve_path);

/// Sorted "key=value" lines.
std::string format_key_values(const std::map<std::string, std::string>& values);
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Writes the whole string, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace speckle
