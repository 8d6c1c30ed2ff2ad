#pragma once

#include <string>
#include <vector>

namespace lemsim {

// Minimal CSV table: a header row plus numeric-or-text cells. No quoting;
// the formats this project reads and writes are plain comma-separated
// numbers with identifier headers.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;       // -1 if absent
  int require_column(const std::string& name) const;  // throws DataError
  double number(int row, int col) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);
void write_csv(const std::string& path, const CsvTable& table);

// Exact-round-trip formatting for doubles (17 significant digits).
std::string format_exact(double v);
// Human-friendly fixed formatting for report files.
std::string format_cell(double v);

}  // namespace lemsim
