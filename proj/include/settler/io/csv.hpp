#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace settler::io {

/// Numeric CSV: header row, comma separator, decimal point. Empty cells read
/// as NaN and NaN is written as an empty cell.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> find(std::string_view name) const;
  /// Parse error naming the missing column.
  std::size_t index(std::string_view name) const;
  std::vector<double> column(std::string_view name) const;
  void add_column(std::string name, const std::vector<double>& values);
};

/// Parse error with the 1-based line number on malformed input.
CsvTable parse_csv(std::string_view text, std::string_view source = "<csv>");
/// Values with 17 significant digits.
std::string format_csv(const CsvTable& table);

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace settler::io
