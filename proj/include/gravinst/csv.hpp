#pragma once

// Plot-ready CSV: header row, 17 significant digits, LF endings, '#' comment
// lines before the header and after the rows.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gravinst/errors.hpp"

namespace gravinst {

struct CsvTable {
  std::vector<std::string> preamble;  // written as '# ' lines above the header
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> footer;    // written as '# ' lines after the rows
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string to_csv_string(const CsvTable& t) {
  std::ostringstream out;
  for (const auto& line : t.preamble) out << "# " << line << '\n';
  for (std::size_t k = 0; k < t.header.size(); ++k) out << (k ? "," : "") << t.header[k];
  out << '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw InvalidArgument("csv row width differs from header");
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_double(row[k]);
    out << '\n';
  }
  for (const auto& line : t.footer) out << "# " << line << '\n';
  return out.str();
}

inline void write_text(const std::string& text, const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write to " + path.string() + " failed");
}

inline void emit_csv(const CsvTable& t, const std::filesystem::path& path) { write_text(to_csv_string(t), path); }

}  // namespace gravinst
