#include "settler/io/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "settler/core/error.hpp"
#include "settler/core/fs.hpp"

namespace settler::io {

std::optional<std::size_t> CsvTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvTable::index(std::string_view name) const {
  if (auto i = find(name)) return *i;
  fail(ErrorCategory::parse, "missing CSV column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::column(std::string_view name) const {
  const std::size_t c = index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

void CsvTable::add_column(std::string name, const std::vector<double>& values) {
  if (values.size() != rows.size()) fail(ErrorCategory::config, "column length does not match the table");
  header.push_back(std::move(name));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].push_back(values[i]);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

[[noreturn]] void parse_error(std::string_view source, std::size_t line, const std::string& what) {
  fail(ErrorCategory::parse, std::string(source) + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

CsvTable parse_csv(std::string_view text, std::string_view source) {
  CsvTable t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (!have_header) {
      for (auto c : cells) {
        if (c.empty()) parse_error(source, line_no, "empty column name in header");
        t.header.emplace_back(c);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      parse_error(source, line_no,
                  "expected " + std::to_string(t.header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto c = cells[i];
      if (c.empty() || c == "nan" || c == "NaN") {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      const char* first = c.data();
      if (!c.empty() && c.front() == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, c.data() + c.size(), v);
      if (ec != std::errc() || ptr != c.data() + c.size()) {
        parse_error(source, line_no, "column '" + t.header[i] + "': not a number: '" + std::string(c) + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (!have_header) parse_error(source, 1, "missing header row");
  return t;
}

std::string format_csv(const CsvTable& t) {
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (i) out += ',';
    out += t.header[i];
  }
  out += '\n';
  char buf[40];
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      if (std::isnan(r[i])) continue;
      const int n = std::snprintf(buf, sizeof buf, "%.17g", r[i]);
      out.append(buf, static_cast<std::size_t>(n));
    }
    out += '\n';
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path), path.string()); }

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_file_atomic(path, format_csv(table));
}

}  // namespace settler::io
