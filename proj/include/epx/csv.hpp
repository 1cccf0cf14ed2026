#pragma once

#include <optional>
#include <string>
#include <vector>

namespace epx {

/// Minimal CSV table: header row + string cells. Comma separated, UTF-8,
/// newline terminated. No quoting support; variable names in this domain
/// never contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Shortest round-trip representation of a double (locale independent).
std::string format_double(double x);

double parse_double(const std::string& cell, const std::string& context);

}  // namespace epx
