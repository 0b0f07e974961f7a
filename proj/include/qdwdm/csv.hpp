#pragma once

// Plain comma-separated files with a fixed header line. No quoting: every
// field written here is a number or a bare token.

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qdwdm/detection.hpp"
#include "qdwdm/dwdm.hpp"
#include "qdwdm/errors.hpp"
#include "qdwdm/spdc_source.hpp"

namespace qdwdm::csv {

inline constexpr std::string_view kCalibrationHeader = "wavelength_nm,temperature_c";
inline constexpr std::string_view kBankHeader = "index,center_nm,fwhm_ghz,loss_db,delay_ns";
inline constexpr std::string_view kTallyHeader = "theta1_deg,theta2_deg,coincidences,duration_s";

// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ConfigError("line " + std::to_string(line) + ": '" + field + "' is not a number");
  return v;
}

/// Data rows of a file whose first non-empty line must equal `header`.
inline std::vector<std::vector<std::string>> read_rows(std::istream& in, std::string_view header) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<std::vector<std::string>> rows;
  const auto columns = split(header).size();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!have_header) {
      if (line != header)
        throw ConfigError("line " + std::to_string(lineno) + ": expected header '" + std::string(header) + "'");
      have_header = true;
      continue;
    }
    auto fields = split(line);
    if (fields.size() != columns)
      throw ConfigError("line " + std::to_string(lineno) + ": expected " + std::to_string(columns) + " fields");
    fields.push_back(std::to_string(lineno));  // keep the line number for diagnostics
    rows.push_back(std::move(fields));
  }
  if (!have_header) throw ConfigError("missing header '" + std::string(header) + "'");
  return rows;
}

inline std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

inline std::vector<CalibrationPoint> read_calibration(std::istream& in) {
  std::vector<CalibrationPoint> out;
  for (const auto& r : read_rows(in, kCalibrationHeader)) {
    const auto line = std::stoul(r.back());
    out.push_back({parse_double(r[0], line), parse_double(r[1], line)});
  }
  return out;
}

inline std::string write_calibration(const std::vector<CalibrationPoint>& table) {
  std::ostringstream os;
  os << kCalibrationHeader << '\n';
  for (const auto& p : table) os << format_number(p.wavelength_nm) << ',' << format_number(p.temperature_c) << '\n';
  return os.str();
}

inline std::vector<ChannelSpec> read_channels(std::istream& in) {
  std::vector<ChannelSpec> out;
  for (const auto& r : read_rows(in, kBankHeader)) {
    const auto line = std::stoul(r.back());
    ChannelSpec ch;
    const double index = parse_double(r[0], line);
    ch.index = static_cast<int>(index);
    if (static_cast<double>(ch.index) != index)
      throw ConfigError("line " + std::to_string(line) + ": channel index must be an integer");
    ch.center_wavelength_nm = parse_double(r[1], line);
    ch.passband_fwhm_ghz = parse_double(r[2], line);
    ch.insertion_loss_db = parse_double(r[3], line);
    ch.path_delay_ns = parse_double(r[4], line);
    out.push_back(ch);
  }
  return out;
}

inline std::string write_channels(const std::vector<ChannelSpec>& channels) {
  std::ostringstream os;
  os << kBankHeader << '\n';
  for (const auto& c : channels)
    os << c.index << ',' << format_number(c.center_wavelength_nm) << ',' << format_number(c.passband_fwhm_ghz) << ','
       << format_number(c.insertion_loss_db) << ',' << format_number(c.path_delay_ns) << '\n';
  return os.str();
}

/// Analyzer angles are analysis angles; "none" marks a run without analyzers.
inline std::string write_tally(const Tally& tally) {
  std::ostringstream os;
  os << kTallyHeader << '\n';
  for (const auto& e : tally.entries) {
    if (e.setting) os << format_number(e.setting->theta1_deg) << ',' << format_number(e.setting->theta2_deg);
    else os << "none,none";
    os << ',' << format_number(e.coincidences) << ',' << format_number(e.duration_s) << '\n';
  }
  return os.str();
}

inline Tally read_tally(std::istream& in) {
  Tally tally;
  for (const auto& r : read_rows(in, kTallyHeader)) {
    const auto line = std::stoul(r.back());
    SettingTally e;
    if (r[0] == "none" && r[1] == "none") e.setting = std::nullopt;
    else e.setting = AnalyzerSetting{parse_double(r[0], line), parse_double(r[1], line)};
    e.coincidences = parse_double(r[2], line);
    e.singles_2 = e.coincidences;
    e.duration_s = parse_double(r[3], line);
    if (e.coincidences < 0 || e.duration_s < 0)
      throw ConfigError("line " + std::to_string(line) + ": counts and durations must be non-negative");
    tally.entries.push_back(e);
  }
  return tally;
}

}  // namespace qdwdm::csv
