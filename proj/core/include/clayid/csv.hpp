#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace clayid::csv {

// Dialect used by every persisted table: comma-separated, '.' decimal
// point, LF line endings, UTF-8, mandatory header row, no quoting
// (all cells are numeric or simple identifiers).

/// Canonical numeric cell format: shortest %.6g form, locale-free.
/// Round-trips any value that carries at most 6 significant digits.
std::string format_number(double value);

/// Locale-independent double parse of a full cell. Throws SchemaError
/// if the cell is not a number.
double parse_number(const std::string& cell, const std::string& column);

/// Parses a non-negative integer cell.
long parse_integer(const std::string& cell, const std::string& column);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws SchemaError naming the column.
  std::size_t column(const std::string& name) const;
};

Table read(const std::filesystem::path& path);
Table parse(const std::string& text);

std::string to_string(const Table& table);
void write(const std::filesystem::path& path, const Table& table);

/// Verifies an exact header match and reports the first offending
/// column on mismatch.
void require_header(const Table& table, const std::vector<std::string>& expected,
                    const std::string& what);

}  // namespace clayid::csv
