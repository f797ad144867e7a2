#include "speckle/csv.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "speckle/error.hpp"
#include "speckle/frame_stack.hpp"

namespace speckle {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double meta_number(const CsvTable& t, const std::string& key) {
  const auto it = t.metadata.find(key);
  return it == t.metadata.end() ? 0.0 : parse_double(it->second);
}

}  // namespace

std::vector<double> CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] != name) continue;
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[j]);
    return out;
  }
  throw Error(ErrorKind::InvalidArgument, "CSV has no column '" + name + "'");
}

std::string format_csv(const CsvTable& table) {
  std::string out;
  for (const auto& [k, v] : table.metadata) out += "# " + k + "=" + v + "\n";
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j) out += ',';
    out += table.header[j];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        auto key = line.substr(1, eq - 1);
        key.erase(0, key.find_first_not_of(' '));
        table.metadata[key] = line.substr(eq + 1);
      }
      continue;
    }
    auto cells = split(line, ',');
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw Error(ErrorKind::IoError, "CSV line " + std::to_string(line_no) + ": expected " +
                                          std::to_string(table.header.size()) + " fields, got " +
                                          std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(parse_double(c));
      } catch (const Error&) {
        throw Error(ErrorKind::IoError,
                    "CSV line " + std::to_string(line_no) + ": not a number '" + c + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw Error(ErrorKind::IoError, "CSV has no header row");
  return table;
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
  write_text(path, format_csv(table));
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

CsvTable histogram_table(const IntensityHistogram& h, const StatsFitResult* fit) {
  CsvTable t;
  t.header = {"bin_center", "density", "model_density", "deconvolved_density"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < h.bin_count(); ++i) {
    t.rows.push_back({h.center(i), h.density[i], fit ? fit->model_density[i] : nan,
                      fit ? fit->deconvolved_density[i] : nan});
  }
  return t;
}

CsvTable curve_table(const CorrelationCurve& curve) {
  CsvTable t;
  t.metadata["distance_z_m"] = format_double(curve.distance_z);
  t.metadata["frames_used"] = std::to_string(curve.frames_used);
  t.metadata["pixel_pitch_m"] = format_double(curve.pixel_pitch);
  t.metadata["stationary"] = curve.stationary ? "true" : "false";
  t.metadata["wavelength_m"] = format_double(curve.wavelength);
  t.metadata["x0"] = std::to_string(curve.x0_position);
  t.header = {"separation_m", "g2", "standard_error"};
  for (std::size_t i = 0; i < curve.g2_values.size(); ++i) {
    t.rows.push_back({curve.separations[i], curve.g2_values[i], curve.standard_errors[i]});
  }
  return t;
}

CorrelationCurve curve_from_table(const CsvTable& t) {
  CorrelationCurve c;
  c.separations = t.column("separation_m");
  c.g2_values = t.column("g2");
  c.standard_errors = t.column("standard_error");
  c.wavelength = meta_number(t, "wavelength_m");
  c.distance_z = meta_number(t, "distance_z_m");
  c.pixel_pitch = meta_number(t, "pixel_pitch_m");
  if (c.pixel_pitch == 0.0 && c.separations.size() > 1) {
    c.pixel_pitch = c.separations[1] - c.separations[0];
  }
  c.frames_used = static_cast<std::size_t>(meta_number(t, "frames_used"));
  c.x0_position = static_cast<std::size_t>(meta_number(t, "x0"));
  const auto st = t.metadata.find("stationary");
  c.stationary = st != t.metadata.end() && st->second == "true";
  return c;
}

CsvTable covariance_table(const Eigen::MatrixXd& covariance) {
  CsvTable t;
  for (Eigen::Index j = 0; j < covariance.cols(); ++j) t.header.push_back("cov_" + std::to_string(j));
  for (Eigen::Index i = 0; i < covariance.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(covariance.cols()));
    for (Eigen::Index j = 0; j < covariance.cols(); ++j) row[static_cast<std::size_t>(j)] = covariance(i, j);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Eigen::MatrixXd covariance_from_table(const CsvTable& t) {
  const auto n = static_cast<Eigen::Index>(t.header.size());
  if (static_cast<Eigen::Index>(t.rows.size()) != n) {
    throw Error(ErrorKind::IoError, "covariance CSV is not square");
  }
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

std::filesystem::path covariance_path(const std::filesystem::path& curve_path) {
  std::filesystem::path p = curve_path;
  return p.replace_extension(".cov.csv");
}

std::string format_key_values(const std::map<std::string, std::string>& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + "=" + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto eq = line.find('=');
    if (line.empty() || line.front() == '#' || eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace speckle
