#include "clayid/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "clayid/errors.hpp"

namespace clayid::csv {

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

double parse_number(const std::string& cell, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw SchemaError("column '" + column + "': not a number: '" + cell + "'");
  }
  return value;
}

long parse_integer(const std::string& cell, const std::string& column) {
  long value = 0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw SchemaError("column '" + column + "': not an integer: '" + cell + "'");
  }
  return value;
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw SchemaError("missing column '" + name + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Table parse(const std::string& text) {
  Table table;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = nl + 1;
    if (line.empty()) continue;
    if (first) {
      table.header = split_line(line);
      first = false;
    } else {
      auto cells = split_line(line);
      if (cells.size() != table.header.size()) {
        throw SchemaError("row " + std::to_string(table.rows.size() + 1) +
                          ": expected " + std::to_string(table.header.size()) +
                          " cells, got " + std::to_string(cells.size()));
      }
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw SchemaError("empty file: header row is mandatory");
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string to_string(const Table& table) {
  std::string out;
  auto append_row = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  append_row(table.header);
  for (const auto& row : table.rows) append_row(row);
  return out;
}

void write(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  out << to_string(table);
}

void require_header(const Table& table, const std::vector<std::string>& expected,
                    const std::string& what) {
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= table.header.size()) {
      throw SchemaError(what + ": missing column '" + expected[i] + "'");
    }
    if (table.header[i] != expected[i]) {
      throw SchemaError(what + ": expected column '" + expected[i] +
                        "', found '" + table.header[i] + "'");
    }
  }
  if (table.header.size() > expected.size()) {
    throw SchemaError(what + ": unexpected column '" +
                      table.header[expected.size()] + "'");
  }
}

}  // namespace clayid::csv
